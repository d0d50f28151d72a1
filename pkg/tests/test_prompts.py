"""Prompt rendering: sentinel blocks, mode differences, determinism."""

from __future__ import annotations

import pytest

from condition_insight.errors import AssetMismatch
from condition_insight.facts import serialize_asset_facts
from condition_insight.prompts import (
    AGENT_SPEC_BEGIN,
    AGENT_SPEC_END,
    FACTS_BEGIN,
    FACTS_END,
    FEEDBACK_BEGIN,
    FEEDBACK_END,
    INSIGHTS_BEGIN,
    INSIGHTS_END,
    JUDGE_SYSTEM_PROMPT,
    NAIVE_SYSTEM_PROMPT,
    OUTPUT_SCHEMA,
    PromptMode,
    constrained_system_prompt,
    extract_block,
    render_judge_prompt,
    render_prompt,
)
from condition_insight.rules import ALL_RULES, RuleConfig

from conftest import make_alert, make_asset, make_order, packet


@pytest.fixture
def facts():
    return packet(orders=[make_order("W-1")], alerts=[make_alert()])


class TestRenderPrompt:
    def test_constrained_system_names_every_rule(self, facts):
        system, _ = render_prompt(facts, PromptMode.CONSTRAINED)
        for rule_id in ALL_RULES:
            assert rule_id in system

    def test_naive_system_names_no_rules(self, facts):
        system, _ = render_prompt(facts, PromptMode.NAIVE)
        assert system == NAIVE_SYSTEM_PROMPT
        for rule_id in ALL_RULES:
            assert rule_id not in system

    def test_both_modes_embed_output_schema(self, facts):
        for mode in PromptMode:
            system, _ = render_prompt(facts, mode)
            assert OUTPUT_SCHEMA in system

    def test_user_prompt_carries_exact_facts_block(self, facts):
        for mode in PromptMode:
            _, user = render_prompt(facts, mode)
            block = extract_block(user, FACTS_BEGIN, FACTS_END)
            assert block == serialize_asset_facts(facts)

    def test_user_prompt_names_the_asset(self, facts):
        _, user = render_prompt(facts, PromptMode.CONSTRAINED)
        assert "asset A-100" in user

    def test_no_feedback_block_by_default(self, facts):
        _, user = render_prompt(facts, PromptMode.CONSTRAINED)
        assert FEEDBACK_BEGIN not in user
        assert FEEDBACK_END not in user

    def test_feedback_round_trips(self, facts):
        note = "condition disagrees with rules: expected NORMAL."
        _, user = render_prompt(facts, PromptMode.CONSTRAINED, feedback=note)
        assert extract_block(user, FEEDBACK_BEGIN, FEEDBACK_END) == note
        # The evidence block is unchanged by the feedback suffix.
        assert extract_block(user, FACTS_BEGIN, FACTS_END) == serialize_asset_facts(facts)

    def test_custom_thresholds_are_rendered(self, facts):
        rules = RuleConfig(
            min_workorders_for_assessment=7,
            min_meters_for_assessment=2,
            delayed_wo_threshold=5,
            lookback_days=99,
        )
        system, _ = render_prompt(facts, PromptMode.CONSTRAINED, rules=rules)
        assert "fewer than 7 work orders" in system
        assert "2 usable meters" in system
        assert "at least 5 work orders are past their target date" in system
        assert "within the last 99 days" in system

    def test_default_rules_used_when_omitted(self, facts):
        with_default, _ = render_prompt(facts, PromptMode.CONSTRAINED)
        explicit, _ = render_prompt(facts, PromptMode.CONSTRAINED, rules=RuleConfig())
        assert with_default == explicit
        assert with_default == constrained_system_prompt(RuleConfig())

    def test_identical_inputs_identical_bytes(self, facts):
        rebuilt = packet(orders=[make_order("W-1")], alerts=[make_alert()])
        for mode in PromptMode:
            assert render_prompt(facts, mode) == render_prompt(rebuilt, mode)

    def test_system_prompt_does_not_depend_on_facts(self, facts):
        other = packet(asset=make_asset("B-200"), orders=[make_order("W-9", asset="B-200")])
        first, _ = render_prompt(facts, PromptMode.CONSTRAINED)
        second, _ = render_prompt(other, PromptMode.CONSTRAINED)
        assert first == second


class TestExtractBlock:
    def test_recovers_exact_text(self):
        text = "\n".join(["preamble", FACTS_BEGIN, "line one", "line two", FACTS_END, "after"])
        assert extract_block(text, FACTS_BEGIN, FACTS_END) == "line one\nline two"

    def test_missing_begin_is_none(self):
        assert extract_block("no sentinels here", FACTS_BEGIN, FACTS_END) is None

    def test_missing_end_is_none(self):
        text = FACTS_BEGIN + "\nbody without terminator"
        assert extract_block(text, FACTS_BEGIN, FACTS_END) is None

    def test_inner_whitespace_preserved(self):
        text = "\n".join([FEEDBACK_BEGIN, "  indented body  ", FEEDBACK_END])
        assert extract_block(text, FEEDBACK_BEGIN, FEEDBACK_END) == "  indented body  "


class TestJudgePrompt:
    def test_blocks_recoverable(self, facts):
        summary_doc = '{"Overall Condition": "Normal"}'
        spec = constrained_system_prompt(RuleConfig())
        system, user = render_judge_prompt(summary_doc, facts, spec)
        assert system == JUDGE_SYSTEM_PROMPT
        assert extract_block(user, INSIGHTS_BEGIN, INSIGHTS_END) == summary_doc
        assert extract_block(user, FACTS_BEGIN, FACTS_END) == serialize_asset_facts(facts)
        assert extract_block(user, AGENT_SPEC_BEGIN, AGENT_SPEC_END) == spec

    def test_rubric_names_all_five_metrics(self, facts):
        _, user = render_judge_prompt("{}", facts, "spec")
        for metric in ("factuality", "coherence", "relevance", "repetitiveness", "specificity"):
            assert metric in user
        assert "overall_condition_valid" in user

    def test_matching_summary_asset_passes(self, facts):
        render_judge_prompt("{}", facts, "spec", summary_asset="A-100")

    def test_mismatched_summary_asset_rejected(self, facts):
        with pytest.raises(AssetMismatch):
            render_judge_prompt("{}", facts, "spec", summary_asset="B-200")

    def test_determinism(self, facts):
        args = ('{"Overall Condition": "Normal"}', facts, "spec")
        assert render_judge_prompt(*args) == render_judge_prompt(*args)
