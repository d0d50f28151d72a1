"""Condition synthesis: prompt, gateway call, parse, verify, retry.

The loop keeps generation and verification strictly separate. The model
only ever sees the evidence document and, on retry, a description of its
disagreement; the rule verdict itself is computed independently and wins
any unresolved conflict.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Protocol

from .errors import (
    PersistentSchemaViolation,
    SchemaViolation,
    UnknownCondition,
)
from .facts import AssetFacts, canonical_json
from .model import ConditionCategory
from .prompts import PromptMode, render_prompt
from .rules import (
    Resolution,
    RuleConfig,
    RuleVerdict,
    VerificationResult,
    classify_condition,
    compare_conditions,
)

GENERATION_TEMPERATURE = 0.0

SUMMARY_KEYS = (
    "Overall Condition",
    "Overall Condition Explanation",
    "Key insights",
    "Recommendations",
    "Overall confidence",
)

_CONDITION_LABELS = {
    ConditionCategory.NORMAL: "Normal",
    ConditionCategory.NEEDS_ATTENTION: "Needs Attention",
    ConditionCategory.NOT_ENOUGH_DATA: "Not Enough Data",
}


class LlmGateway(Protocol):
    def complete(self, system_prompt: str, user_prompt: str, temperature: float) -> str: ...


@dataclass(frozen=True)
class Confidence:
    value: float
    reasoning: str


@dataclass(frozen=True)
class ConditionInsightSummary:
    overall_condition: ConditionCategory
    overall_condition_explanation: str
    key_insights: tuple[str, ...]
    recommendations: tuple[str, ...]
    overall_confidence: Confidence
    confidence_clamped: bool = False


def condition_label(category: ConditionCategory) -> str:
    return _CONDITION_LABELS[category]


def normalize_condition(raw: str) -> ConditionCategory:
    """Map a free-form condition string onto the three categories."""
    canon = "_".join("".join(c if c.isalnum() else " " for c in raw).upper().split())
    try:
        return ConditionCategory(canon)
    except ValueError:
        raise UnknownCondition(raw) from None


def serialize_summary(summary: ConditionInsightSummary) -> str:
    document = {
        "Overall Condition": condition_label(summary.overall_condition),
        "Overall Condition Explanation": summary.overall_condition_explanation,
        "Key insights": list(summary.key_insights),
        "Recommendations": list(summary.recommendations),
        "Overall confidence": {
            "reasoning": summary.overall_confidence.reasoning,
            "value": summary.overall_confidence.value,
        },
    }
    return canonical_json(document, top_order=SUMMARY_KEYS)


def _first_json_object(raw: str) -> dict[str, object]:
    decoder = json.JSONDecoder()
    position = raw.find("{")
    while position >= 0:
        try:
            value, _ = decoder.raw_decode(raw, position)
        except json.JSONDecodeError:
            position = raw.find("{", position + 1)
            continue
        if isinstance(value, dict):
            return value
        position = raw.find("{", position + 1)
    raise SchemaViolation("no JSON object found in response")


def _text_list(value: object, field: str) -> tuple[str, ...]:
    if not isinstance(value, list):
        raise SchemaViolation(f"{field} must be a list")
    return tuple(item if isinstance(item, str) else str(item) for item in value)


def parse_insight(raw: str) -> ConditionInsightSummary:
    """Extract the first schema-conforming document from a raw response.

    Surrounding prose and code fences are tolerated; the schema itself is
    not negotiable. The confidence value is clamped into [0, 1] and the
    clamping is flagged on the summary.
    """
    document = _first_json_object(raw)
    missing = [k for k in SUMMARY_KEYS if k not in document]
    if missing:
        raise SchemaViolation(f"response missing fields {missing}")
    condition_raw = document["Overall Condition"]
    if not isinstance(condition_raw, str):
        raise SchemaViolation("Overall Condition must be a string")
    condition = normalize_condition(condition_raw)
    confidence_doc = document["Overall confidence"]
    if not isinstance(confidence_doc, dict) or "value" not in confidence_doc:
        raise SchemaViolation("Overall confidence must be an object with a value")
    value = confidence_doc["value"]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation("confidence value must be numeric")
    clamped = not 0.0 <= float(value) <= 1.0
    explanation = document["Overall Condition Explanation"]
    return ConditionInsightSummary(
        overall_condition=condition,
        overall_condition_explanation=(
            explanation if isinstance(explanation, str) else str(explanation)
        ),
        key_insights=_text_list(document["Key insights"], "Key insights"),
        recommendations=_text_list(document["Recommendations"], "Recommendations"),
        overall_confidence=Confidence(
            value=min(1.0, max(0.0, float(value))),
            reasoning=str(confidence_doc.get("reasoning", "")),
        ),
        confidence_clamped=clamped,
    )


def _disagreement_feedback(verdict: RuleVerdict, llm: ConditionCategory) -> str:
    fired = ", ".join(t.rule_id for t in verdict.triggered_rules) or "none"
    return (
        f"condition disagrees with rules: expected {verdict.category.value}"
        f" but the response said {llm.value}; fired rules: {fired}."
        " Re-assess and state the overall condition accordingly."
    )


def _override(summary: ConditionInsightSummary, verdict: RuleVerdict) -> ConditionInsightSummary:
    notice = (
        f"Override notice: the deterministic rule check determined "
        f"{condition_label(verdict.category)}; the generated condition "
        f"{condition_label(summary.overall_condition)} was replaced. "
    )
    return replace(
        summary,
        overall_condition=verdict.category,
        overall_condition_explanation=notice + summary.overall_condition_explanation,
    )


@dataclass(frozen=True)
class GenerationTrace:
    """Everything a run record needs to reconstruct one synthesis."""

    prompts: tuple[tuple[str, str], ...]
    raw_responses: tuple[str, ...]


def generate_insight(
    facts: AssetFacts,
    mode: PromptMode,
    gateway: LlmGateway,
    rules: RuleConfig,
    max_retries: int = 1,
) -> tuple[ConditionInsightSummary, VerificationResult]:
    """Run the generation-verification loop for one asset."""
    summary, result, _ = generate_insight_traced(facts, mode, gateway, rules, max_retries)
    return summary, result


def generate_insight_traced(
    facts: AssetFacts,
    mode: PromptMode,
    gateway: LlmGateway,
    rules: RuleConfig,
    max_retries: int = 1,
) -> tuple[ConditionInsightSummary, VerificationResult, GenerationTrace]:
    """generate_insight plus the prompts and raw responses, for persistence.

    Parse failures consume a retry attempt like disagreements do. When the
    final attempt parses but disagrees, the rule category replaces the
    generated one; when no attempt ever parses, the failure is raised.
    """
    if max_retries < 0:
        raise ValueError("max_retries must be non-negative")
    verdict = classify_condition(facts, rules)
    feedback: str | None = None
    last_error: Exception | None = None
    parsed: tuple[ConditionInsightSummary, int] | None = None
    prompts: list[tuple[str, str]] = []
    responses: list[str] = []
    for attempt in range(1, max_retries + 2):
        system, user = render_prompt(facts, mode, feedback, rules=rules)
        prompts.append((system, user))
        raw = gateway.complete(system, user, GENERATION_TEMPERATURE)
        responses.append(raw)
        try:
            summary = parse_insight(raw)
        except (SchemaViolation, UnknownCondition) as exc:
            last_error = exc
            feedback = (
                f"the previous output could not be parsed ({exc}); respond with"
                " exactly the required JSON schema and nothing else."
            )
            continue
        parsed = (summary, attempt)
        result = compare_conditions(verdict, summary.overall_condition, attempt, max_retries)
        trace = GenerationTrace(tuple(prompts), tuple(responses))
        if result.resolution is Resolution.ACCEPTED:
            return summary, result, trace
        if result.resolution is Resolution.OVERRIDDEN:
            return _override(summary, verdict), result, trace
        feedback = _disagreement_feedback(verdict, summary.overall_condition)
    trace = GenerationTrace(tuple(prompts), tuple(responses))
    if parsed is None:
        raise PersistentSchemaViolation(
            f"no attempt produced parseable output; last error: {last_error}"
        )
    # Final attempt was unparseable but an earlier one parsed: govern by rule.
    summary, attempt = parsed
    result = VerificationResult(
        rule_category=verdict.category,
        llm_category=summary.overall_condition,
        agree=verdict.category is summary.overall_condition,
        resolution=Resolution.OVERRIDDEN,
        attempt=attempt,
    )
    return _override(summary, verdict), result, trace
