"""Completion backends: deterministic mocks, replay storage, remote client."""

from __future__ import annotations

import pytest
import requests

from condition_insight.agent import parse_insight
from condition_insight.errors import GatewayUnavailable, ReplayMiss, SchemaViolation
from condition_insight.gateway import (
    AdversarialNormalGateway,
    RemoteGateway,
    ReplayGateway,
    RuleFaithfulMockGateway,
    StaticGateway,
    prompt_digest,
)
from condition_insight.model import ConditionCategory
from condition_insight.prompts import PromptMode, render_prompt
from condition_insight.rules import ALL_RULES

from conftest import golden_packets, make_alert, make_gauge, make_order, packet


def complete(gateway, facts, mode=PromptMode.CONSTRAINED):
    system, user = render_prompt(facts, mode)
    return gateway.complete(system, user, 0.0)


THREE_PMS = [
    make_order("PM-1", reported_offset=-200, target_offset=-186, completion_offset=-186),
    make_order("PM-2", reported_offset=-120, target_offset=-106, completion_offset=-106),
    make_order("PM-3", reported_offset=-40, target_offset=-26, completion_offset=-26),
]


class TestRuleFaithfulMock:
    def test_constrained_agrees_with_rules_on_every_golden_case(self, golden_cases):
        gateway = RuleFaithfulMockGateway()
        for name, facts, expected, _ in golden_cases:
            summary = parse_insight(complete(gateway, facts))
            assert summary.overall_condition.value == expected, name

    def test_constrained_explanation_names_fired_rules(self, golden_cases):
        gateway = RuleFaithfulMockGateway()
        by_name = {name: (facts, rule_ids) for name, facts, _, rule_ids in golden_cases}
        facts, rule_ids = by_name["emergency_plus_alert"]
        summary = parse_insight(complete(gateway, facts))
        for rule_id in rule_ids:
            assert rule_id in summary.overall_condition_explanation

    def test_confidence_counts_populated_sources(self):
        gateway = RuleFaithfulMockGateway()
        orders_only = parse_insight(complete(gateway, packet(orders=THREE_PMS)))
        assert orders_only.overall_confidence.value == 0.2
        assert "Populated sources: work orders." in orders_only.overall_confidence.reasoning
        richer = parse_insight(
            complete(
                gateway,
                packet(orders=THREE_PMS, series=[make_gauge()], alerts=[make_alert()]),
            )
        )
        assert richer.overall_confidence.value == 0.6

    def test_insufficient_meter_not_counted_as_source(self):
        gateway = RuleFaithfulMockGateway()
        facts = packet(orders=THREE_PMS, series=[make_gauge(values=(50.0, 51.0))])
        summary = parse_insight(complete(gateway, facts))
        assert summary.overall_confidence.value == 0.2

    def test_naive_reacts_only_to_loud_signals(self, golden_cases):
        gateway = RuleFaithfulMockGateway()
        by_name = {name: facts for name, facts, _, _ in golden_cases}
        naive = lambda name: parse_insight(
            complete(gateway, by_name[name], PromptMode.NAIVE)
        ).overall_condition
        assert naive("open_emergency") is ConditionCategory.NEEDS_ATTENTION
        assert naive("active_critical_alert") is ConditionCategory.NEEDS_ATTENTION
        # The quieter defects sail straight past an unconstrained summarizer.
        assert naive("delayed_pair") is ConditionCategory.NORMAL
        assert naive("meter_anomaly_recent") is ConditionCategory.NORMAL
        assert naive("down_while_running") is ConditionCategory.NORMAL

    def test_naive_never_admits_missing_data(self, golden_cases):
        gateway = RuleFaithfulMockGateway()
        for name, facts, expected, _ in golden_cases:
            if expected != "NOT_ENOUGH_DATA":
                continue
            summary = parse_insight(complete(gateway, facts, PromptMode.NAIVE))
            assert summary.overall_condition is ConditionCategory.NORMAL, name

    def test_constrained_detection_needs_all_rule_ids(self):
        gateway = RuleFaithfulMockGateway()
        facts = packet(
            orders=THREE_PMS
            + [
                make_order(
                    "CM-1", reported_offset=-100, target_offset=-93, completion_offset=-80
                ),
                make_order(
                    "CM-2", reported_offset=-70, target_offset=-63, completion_offset=-50
                ),
            ]
        )
        _, user = render_prompt(facts, PromptMode.CONSTRAINED)
        almost_constrained = " ".join(ALL_RULES[:-1])
        summary = parse_insight(gateway.complete(almost_constrained, user, 0.0))
        # Two delayed orders: the rules flag it, the naive path does not.
        assert summary.overall_condition is ConditionCategory.NORMAL

    def test_deterministic_bytes(self):
        gateway = RuleFaithfulMockGateway()
        facts = packet(orders=THREE_PMS, alerts=[make_alert()])
        assert complete(gateway, facts) == complete(RuleFaithfulMockGateway(), facts)

    def test_prompt_without_facts_block_rejected(self):
        gateway = RuleFaithfulMockGateway()
        with pytest.raises(SchemaViolation):
            gateway.complete("system", "user prompt with no evidence", 0.0)


class TestAdversarialNormal:
    def test_always_normal(self, golden_cases):
        gateway = AdversarialNormalGateway()
        for name, facts, _, _ in golden_cases:
            summary = parse_insight(complete(gateway, facts))
            assert summary.overall_condition is ConditionCategory.NORMAL, name

    def test_output_is_schema_conforming_and_stable(self):
        gateway = AdversarialNormalGateway()
        first = gateway.complete("s", "u", 0.0)
        assert first == gateway.complete("other", "prompt", 1.0)
        parse_insight(first)


class TestStaticGateway:
    def test_sequences_then_sticks_at_last(self):
        gateway = StaticGateway(["first", "second"])
        results = [gateway.complete("s", "u", 0.0) for _ in range(4)]
        assert results == ["first", "second", "second", "second"]

    def test_single_string_repeats(self):
        gateway = StaticGateway("only")
        assert [gateway.complete("s", "u", 0.0) for _ in range(3)] == ["only"] * 3


class TestReplay:
    def test_digest_is_stable_and_order_sensitive(self):
        assert prompt_digest("sys", "user") == prompt_digest("sys", "user")
        assert prompt_digest("sys", "user") != prompt_digest("user", "sys")
        assert len(prompt_digest("a", "b")) == 64

    def test_separator_prevents_boundary_collisions(self):
        assert prompt_digest("ab", "c") != prompt_digest("a", "bc")

    def test_record_then_replay_round_trip(self, tmp_path):
        gateway = ReplayGateway(tmp_path / "fixtures")
        response = "line one\nline two with unicode °C"
        digest = gateway.record("sys", "user", response)
        assert digest == prompt_digest("sys", "user")
        assert (tmp_path / "fixtures" / f"{digest}.txt").exists()
        assert gateway.complete("sys", "user", 0.0) == response

    def test_unrecorded_prompt_raises(self, tmp_path):
        gateway = ReplayGateway(tmp_path)
        with pytest.raises(ReplayMiss):
            gateway.complete("sys", "never recorded", 0.0)


class _FakeResponse:
    def __init__(self, payload):
        self._payload = payload

    def raise_for_status(self):
        pass

    def json(self):
        return self._payload


class TestRemoteGateway:
    def test_extract_text_chat_shape(self):
        payload = {"choices": [{"message": {"content": "hello"}}]}
        assert RemoteGateway._extract_text(payload) == "hello"

    def test_extract_text_bare_content(self):
        assert RemoteGateway._extract_text({"content": "hi"}) == "hi"

    @pytest.mark.parametrize("payload", [{}, {"choices": []}, {"choices": [{}]}, "text", None])
    def test_extract_text_rejects_other_shapes(self, payload):
        with pytest.raises(GatewayUnavailable):
            RemoteGateway._extract_text(payload)

    def test_token_read_from_environment(self, monkeypatch):
        gateway = RemoteGateway("http://example/v1", "m", token_env="TEST_GW_TOKEN")
        monkeypatch.delenv("TEST_GW_TOKEN", raising=False)
        assert "Authorization" not in gateway._headers()
        monkeypatch.setenv("TEST_GW_TOKEN", "secret")
        assert gateway._headers()["Authorization"] == "Bearer secret"

    def test_success_builds_chat_body(self, monkeypatch):
        seen = {}

        def fake_post(url, json=None, headers=None, timeout=None):
            seen.update(url=url, body=json, timeout=timeout)
            return _FakeResponse({"choices": [{"message": {"content": "ok"}}]})

        monkeypatch.setattr("condition_insight.gateway.requests.post", fake_post)
        gateway = RemoteGateway("http://example/v1", "pump-model", timeout_seconds=9.0)
        assert gateway.complete("sys", "user", 0.25) == "ok"
        assert seen["url"] == "http://example/v1"
        assert seen["timeout"] == 9.0
        assert seen["body"]["model"] == "pump-model"
        assert seen["body"]["temperature"] == 0.25
        assert seen["body"]["messages"] == [
            {"role": "system", "content": "sys"},
            {"role": "user", "content": "user"},
        ]

    def test_exhausted_attempts_raise(self, monkeypatch):
        calls = []

        def failing_post(*args, **kwargs):
            calls.append(1)
            raise requests.ConnectionError("refused")

        monkeypatch.setattr("condition_insight.gateway.requests.post", failing_post)
        gateway = RemoteGateway(
            "http://example/v1", "m", max_attempts=2, backoff_seconds=0.0
        )
        with pytest.raises(GatewayUnavailable, match="after 2 attempts"):
            gateway.complete("sys", "user", 0.0)
        assert len(calls) == 2
