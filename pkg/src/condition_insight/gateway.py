"""Pluggable completion backends for synthesis and judging.

Three families: a remote chat-completion endpoint for real models, replay
from recorded fixtures for offline regression, and deterministic mocks that
compute their answer directly from the evidence document embedded in the
prompt. The mocks are pure functions of the prompt text.
"""

from __future__ import annotations

import hashlib
import os
import threading
import time
from pathlib import Path

import requests

from .errors import GatewayUnavailable, ReplayMiss, SchemaViolation
from .agent import (
    Confidence,
    ConditionInsightSummary,
    condition_label,
    serialize_summary,
)
from .facts import AssetFacts, parse_asset_facts
from .model import AlertSeverity, ConditionCategory, WorkOrderStatus, WorkOrderType
from .prompts import FACTS_BEGIN, FACTS_END, extract_block
from .rules import (
    ALL_RULES,
    RULE_ACTIVE_CRITICAL_ALERT,
    RULE_DELAYED_WORKORDERS,
    RULE_DOWN_WHILE_RUNNING,
    RULE_METER_ANOMALY,
    RULE_NOT_ENOUGH_DATA,
    RULE_OPEN_EMERGENCY_WO,
    RuleConfig,
    RuleVerdict,
    classify_condition,
)

_OPEN = frozenset({WorkOrderStatus.OPEN, WorkOrderStatus.IN_PROGRESS})


def _facts_from_prompt(user_prompt: str) -> AssetFacts:
    document = extract_block(user_prompt, FACTS_BEGIN, FACTS_END)
    if document is None:
        raise SchemaViolation("prompt carries no evidence document")
    return parse_asset_facts(document)


def _is_constrained(system_prompt: str) -> bool:
    return all(rule_id in system_prompt for rule_id in ALL_RULES)


def _populated_sources(facts: AssetFacts) -> list[str]:
    names = []
    if sum(facts.workorder_facts.counts.values()):
        names.append("work orders")
    if any(not m.insufficient_data for m in facts.meter_facts):
        names.append("meters")
    if facts.alert_facts:
        names.append("alerts")
    if facts.fmea_facts:
        names.append("failure-mode matches")
    if facts.health_scores:
        names.append("health scores")
    return names


_ALL_SOURCES = ("work orders", "meters", "alerts", "failure-mode matches", "health scores")


def _grounded_insights(facts: AssetFacts, verdict: RuleVerdict) -> list[str]:
    wo = facts.workorder_facts
    insights: list[str] = []
    for fired in verdict.triggered_rules:
        if fired.rule_id == RULE_OPEN_EMERGENCY_WO:
            n = sum(
                1
                for d in wo.corrective_and_other_workorders
                if d.wo_type is WorkOrderType.EMERGENCY and d.status in _OPEN
            )
            insights.append(
                f"{n} emergency work order(s) remain open within the"
                f" {wo.window_days} day evidence window."
            )
        elif fired.rule_id == RULE_DELAYED_WORKORDERS:
            insights.append(
                f"{wo.delayed_count} work order(s) are past their target date,"
                " indicating execution delays."
            )
        elif fired.rule_id == RULE_ACTIVE_CRITICAL_ALERT:
            ids = sorted(
                a.alert_id
                for a in facts.alert_facts
                if a.active and a.severity is AlertSeverity.CRITICAL
            )
            insights.append(f"Active critical alert(s) present: {', '.join(ids)}.")
        elif fired.rule_id == RULE_METER_ANOMALY:
            insights.append(f"Meter behavior is abnormal: {fired.evidence}.")
        elif fired.rule_id == RULE_DOWN_WHILE_RUNNING:
            insights.append(
                "Recorded status is DOWN while the running flag is true;"
                " the asset record is internally inconsistent."
            )
        elif fired.rule_id == RULE_NOT_ENOUGH_DATA:
            insights.append(f"Evidence coverage is thin: {fired.evidence}.")
    if verdict.category is ConditionCategory.NORMAL:
        total = sum(wo.counts.values())
        insights.append(
            f"{total} work order(s) in the {wo.window_days} day window, all"
            " closed on schedule with quiet meters and no open alerts."
        )
    if facts.fmea_facts:
        top = facts.fmea_facts[0]
        insights.append(
            f"Work-order history aligns most strongly with {top.component}:"
            f" {top.mechanism} (transported mass {top.mass:.3g})."
        )
    return insights[:5]


def _grounded_recommendations(facts: AssetFacts, verdict: RuleVerdict) -> list[str]:
    recs: list[str] = []
    for group in facts.fmea_facts[:2]:
        for action in group.actions[:2]:
            recs.append(f"{group.component}: {action}.")
    for fired in verdict.triggered_rules:
        if fired.rule_id == RULE_OPEN_EMERGENCY_WO:
            recs.append("Prioritize completion of the open emergency work order(s).")
        elif fired.rule_id == RULE_DELAYED_WORKORDERS:
            recs.append(
                f"Reschedule the {facts.workorder_facts.delayed_count} delayed"
                " work order(s) and review backlog capacity."
            )
        elif fired.rule_id == RULE_ACTIVE_CRITICAL_ALERT:
            recs.append("Investigate and clear the active critical alert(s).")
        elif fired.rule_id == RULE_METER_ANOMALY:
            recs.append("Inspect the metered component(s) showing abnormal behavior.")
        elif fired.rule_id == RULE_DOWN_WHILE_RUNNING:
            recs.append("Correct the asset status record or the running flag.")
        elif fired.rule_id == RULE_NOT_ENOUGH_DATA:
            recs.append("Extend evidence collection before drawing conclusions.")
    if not recs:
        recs.append("Continue the current preventive maintenance schedule.")
    return recs[:5]


def _constrained_response(facts: AssetFacts, rules: RuleConfig) -> str:
    verdict = classify_condition(facts, rules)
    populated = _populated_sources(facts)
    missing = [s for s in _ALL_SOURCES if s not in populated]
    confidence = Confidence(
        value=round(len(populated) / len(_ALL_SOURCES), 2),
        reasoning=(
            f"Populated sources: {', '.join(populated) or 'none'}."
            f" Missing: {', '.join(missing) or 'none'}."
        ),
    )
    fired = ", ".join(t.rule_id for t in verdict.triggered_rules) or "none"
    summary = ConditionInsightSummary(
        overall_condition=verdict.category,
        overall_condition_explanation=(
            f"Condition {condition_label(verdict.category)} selected by the"
            f" stated rules; fired: {fired}."
        ),
        key_insights=tuple(_grounded_insights(facts, verdict)),
        recommendations=tuple(_grounded_recommendations(facts, verdict)),
        overall_confidence=confidence,
    )
    return serialize_summary(summary)


def _naive_category(facts: AssetFacts) -> ConditionCategory:
    has_emergency = any(
        d.wo_type is WorkOrderType.EMERGENCY and d.status in _OPEN
        for d in facts.workorder_facts.corrective_and_other_workorders
    )
    has_critical = any(
        a.active and a.severity is AlertSeverity.CRITICAL for a in facts.alert_facts
    )
    return (
        ConditionCategory.NEEDS_ATTENTION
        if has_emergency or has_critical
        else ConditionCategory.NORMAL
    )


def _naive_response(facts: AssetFacts) -> str:
    category = _naive_category(facts)
    if category is ConditionCategory.NEEDS_ATTENTION:
        insights = (
            "There seem to be some problems that likely need attention soon.",
            "The equipment could possibly be degrading based on the data.",
            "Some problems probably need attention from the team.",
        )
        recommendations = (
            "Have someone take a look at the asset.",
            "Maybe schedule some maintenance when convenient.",
        )
    else:
        insights = (
            "The asset generally looks okay from the data.",
            "Operations appear to be mostly normal overall.",
            "Everything seems mostly fine with this equipment.",
        )
        recommendations = ("Keep monitoring the asset as usual.",)
    summary = ConditionInsightSummary(
        overall_condition=category,
        overall_condition_explanation="General impression from the provided data.",
        key_insights=insights,
        recommendations=recommendations,
        overall_confidence=Confidence(value=0.5, reasoning="General impression."),
    )
    return serialize_summary(summary)


class RuleFaithfulMockGateway:
    """Deterministic stand-in model.

    Given a constrained prompt it follows the embedded rules exactly (so it
    always agrees with the verifier); given a naive prompt it behaves like
    an unconstrained summarizer that only reacts to loud signals and never
    admits to missing data.
    """

    def __init__(self, rules: RuleConfig | None = None) -> None:
        self.rules = rules if rules is not None else RuleConfig()

    def complete(self, system_prompt: str, user_prompt: str, temperature: float) -> str:
        facts = _facts_from_prompt(user_prompt)
        if _is_constrained(system_prompt):
            return _constrained_response(facts, self.rules)
        return _naive_response(facts)


class AdversarialNormalGateway:
    """Always claims Normal; exists to exercise the override path."""

    def complete(self, system_prompt: str, user_prompt: str, temperature: float) -> str:
        summary = ConditionInsightSummary(
            overall_condition=ConditionCategory.NORMAL,
            overall_condition_explanation="No concerns identified.",
            key_insights=("The asset is operating normally.",),
            recommendations=("No action needed.",),
            overall_confidence=Confidence(value=0.9, reasoning="Confident."),
        )
        return serialize_summary(summary)


class StaticGateway:
    """Returns a fixed response; for exercising parse and retry paths."""

    def __init__(self, responses: list[str] | tuple[str, ...] | str) -> None:
        self._responses = [responses] if isinstance(responses, str) else list(responses)
        self._calls = 0

    def complete(self, system_prompt: str, user_prompt: str, temperature: float) -> str:
        response = self._responses[min(self._calls, len(self._responses) - 1)]
        self._calls += 1
        return response


def prompt_digest(system_prompt: str, user_prompt: str) -> str:
    payload = system_prompt.encode() + b"\x00" + user_prompt.encode()
    return hashlib.sha256(payload).hexdigest()


class ReplayGateway:
    """Serves recorded responses keyed by prompt digest."""

    def __init__(self, fixture_dir: str | Path) -> None:
        self.fixture_dir = Path(fixture_dir)

    def _path(self, digest: str) -> Path:
        return self.fixture_dir / f"{digest}.txt"

    def record(self, system_prompt: str, user_prompt: str, response: str) -> str:
        digest = prompt_digest(system_prompt, user_prompt)
        self.fixture_dir.mkdir(parents=True, exist_ok=True)
        self._path(digest).write_text(response, encoding="utf-8")
        return digest

    def complete(self, system_prompt: str, user_prompt: str, temperature: float) -> str:
        digest = prompt_digest(system_prompt, user_prompt)
        path = self._path(digest)
        if not path.exists():
            raise ReplayMiss(digest)
        return path.read_text(encoding="utf-8")


class RemoteGateway:
    """Chat-completion HTTP endpoint with retry, timeout, and a flight cap."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        token_env: str = "GATEWAY_TOKEN",
        timeout_seconds: float = 60.0,
        max_attempts: int = 3,
        backoff_seconds: float = 2.0,
        max_in_flight: int = 4,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.token_env = token_env
        self.timeout_seconds = timeout_seconds
        self.max_attempts = max_attempts
        self.backoff_seconds = backoff_seconds
        self._slots = threading.Semaphore(max_in_flight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    @staticmethod
    def _extract_text(payload: object) -> str:
        if isinstance(payload, dict):
            choices = payload.get("choices")
            if isinstance(choices, list) and choices:
                message = choices[0].get("message", {})
                if isinstance(message, dict) and isinstance(message.get("content"), str):
                    return message["content"]
            if isinstance(payload.get("content"), str):
                return payload["content"]
        raise GatewayUnavailable("endpoint returned an unrecognized payload shape")

    def complete(self, system_prompt: str, user_prompt: str, temperature: float) -> str:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
            "temperature": temperature,
        }
        last: Exception | None = None
        with self._slots:
            for attempt in range(self.max_attempts):
                if attempt:
                    time.sleep(self.backoff_seconds * (2 ** (attempt - 1)))
                try:
                    response = requests.post(
                        self.endpoint,
                        json=body,
                        headers=self._headers(),
                        timeout=self.timeout_seconds,
                    )
                    response.raise_for_status()
                    return self._extract_text(response.json())
                except (requests.RequestException, ValueError) as exc:
                    last = exc
        raise GatewayUnavailable(f"gateway failed after {self.max_attempts} attempts: {last}")
