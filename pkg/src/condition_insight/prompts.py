"""Prompt rendering for the synthesis and judging calls.

Everything here is plain string assembly: given the same packet and mode
the rendered prompts are byte-identical, which is what makes recorded
replays and offline mocks possible. The evidence document and the feedback
block sit between fixed sentinel lines so that downstream consumers
(deterministic mocks, audits) can recover them exactly.
"""

from __future__ import annotations

from enum import Enum

from .errors import AssetMismatch
from .facts import AssetFacts, serialize_asset_facts
from .rules import (
    RULE_ACTIVE_CRITICAL_ALERT,
    RULE_DELAYED_WORKORDERS,
    RULE_DOWN_WHILE_RUNNING,
    RULE_METER_ANOMALY,
    RULE_NOT_ENOUGH_DATA,
    RULE_OPEN_EMERGENCY_WO,
    RuleConfig,
)

FACTS_BEGIN = "=== ASSET_FACTS BEGIN ==="
FACTS_END = "=== ASSET_FACTS END ==="
FEEDBACK_BEGIN = "=== FEEDBACK BEGIN ==="
FEEDBACK_END = "=== FEEDBACK END ==="

INSIGHTS_BEGIN = "=== CONDITION_INSIGHTS BEGIN ==="
INSIGHTS_END = "=== CONDITION_INSIGHTS END ==="
AGENT_SPEC_BEGIN = "=== AGENT-SPECIFICATIONS BEGIN ==="
AGENT_SPEC_END = "=== AGENT-SPECIFICATIONS END ==="


class PromptMode(str, Enum):
    CONSTRAINED = "CONSTRAINED"
    NAIVE = "NAIVE"


OUTPUT_SCHEMA = """Respond with a single JSON object and nothing else:
{
  "Overall Condition": "<Normal | Needs Attention | Not Enough Data>",
  "Overall Condition Explanation": "<text>",
  "Key insights": ["<text>", ...],
  "Recommendations": ["<text>", ...],
  "Overall confidence": {"value": <number between 0 and 1>, "reasoning": "<text>"}
}"""


def _condition_rules(rules: RuleConfig) -> str:
    return f"""CONDITION SELECTION RULES (apply in this exact order):
1. {RULE_NOT_ENOUGH_DATA}: choose "Not Enough Data" when the evidence window
   holds fewer than {rules.min_workorders_for_assessment} work orders AND fewer than
   {rules.min_meters_for_assessment} usable meters AND there are no alerts.
2. Otherwise choose "Needs Attention" when ANY of the following holds:
   - {RULE_OPEN_EMERGENCY_WO}: at least 1 emergency work order is open or in progress.
   - {RULE_DELAYED_WORKORDERS}: at least {rules.delayed_wo_threshold} work orders are past their target date.
   - {RULE_ACTIVE_CRITICAL_ALERT}: at least 1 critical alert is active.
   - {RULE_METER_ANOMALY}: any meter event of kind Z_SCORE_ANOMALY, RESET, or
     RATE_ANOMALY occurred within the last {rules.lookback_days} days.
   - {RULE_DOWN_WHILE_RUNNING}: asset status is DOWN while is_running is true.
3. Otherwise choose "Normal"."""


_INSIGHT_RULES = """KEY INSIGHT RULES:
- Ground every insight in a specific field of the evidence document; never
  introduce facts that are not present in it.
- Group related findings by component, one insight per component theme.
- Order insights by operational severity: safety and emergency findings
  first, then delays, then meter behavior, then coverage gaps.
- Produce at most 5 insights; fewer is better than padded."""

_RECOMMENDATION_RULES = """RECOMMENDATION RULES:
- Recommend specific component-level actions, reusing the actions listed in
  fmea_facts whenever a matched failure mode applies.
- One recommendation per action; do not bundle unrelated actions.
- Never recommend actions for components absent from the evidence."""

_CONFIDENCE_RULES = """CONFIDENCE RULES (deterministic majority method):
- Count the evidence sources that are populated (work orders, meters,
  alerts, failure-mode matches, health scores).
- Confidence value = populated sources / 5, stated to two decimals.
- The reasoning must name the populated and missing sources."""

_METER_GUIDANCE = """METER PATTERN GUIDANCE:
- Z_SCORE_ANOMALY on a gauge meter signals an out-of-band reading; relate
  it to the component the meter observes.
- RESET on a continuous meter usually indicates counter replacement or
  rollover; RATE_ANOMALY indicates abnormal usage intensity.
- FLAT_PERIOD suggests a stale or disconnected meter; treat it as a data
  coverage concern, not a health event."""

_LANGUAGE_RULES = """LANGUAGE AND FORMAT RULES:
- Use numeric digits for every quantity.
- Expand abbreviations into full terminology on first use.
- When citing a problem code, describe what the code means in words."""


def constrained_system_prompt(rules: RuleConfig) -> str:
    return "\n\n".join(
        [
            "You are an evidence-grounded maintenance analyst. You reason only "
            "over the structured evidence document provided between the "
            f"{FACTS_BEGIN} and {FACTS_END} lines, and you confine every "
            "statement to that evidence.",
            _LANGUAGE_RULES,
            _condition_rules(rules),
            _INSIGHT_RULES,
            _RECOMMENDATION_RULES,
            _CONFIDENCE_RULES,
            _METER_GUIDANCE,
            OUTPUT_SCHEMA,
        ]
    )


NAIVE_SYSTEM_PROMPT = "\n\n".join(
    [
        "You are a helpful assistant. Summarize the condition of the asset "
        "described by the JSON document in the user message.",
        OUTPUT_SCHEMA,
    ]
)


def render_prompt(
    facts: AssetFacts,
    mode: PromptMode,
    feedback: str | None = None,
    *,
    rules: RuleConfig | None = None,
) -> tuple[str, str]:
    """Build (system_prompt, user_prompt) for one synthesis call."""
    if mode is PromptMode.CONSTRAINED:
        system = constrained_system_prompt(rules if rules is not None else RuleConfig())
    else:
        system = NAIVE_SYSTEM_PROMPT
    parts = [
        "Assess the condition of asset "
        f"{facts.asset_details_facts.asset_number} from this evidence document:",
        FACTS_BEGIN,
        serialize_asset_facts(facts),
        FACTS_END,
    ]
    if feedback is not None:
        parts += [FEEDBACK_BEGIN, feedback, FEEDBACK_END]
    return system, "\n".join(parts)


def extract_block(text: str, begin: str, end: str) -> str | None:
    """Recover the exact text between two sentinel lines, or None."""
    start = text.find(begin)
    if start < 0:
        return None
    start += len(begin)
    stop = text.find(end, start)
    if stop < 0:
        return None
    return text[start:stop].strip("\n")


_JUDGE_RUBRICS = """Score every insight and every recommendation on a 1-3 scale for each
of these five metrics, where 1 is worst and 3 is best unless stated:
- factuality: 3 when the statement is directly supported by ASSET-FACTS,
  2 when partially supported, 1 when unsupported.
- coherence: 1 when the statement contradicts another statement or the
  overall condition, else 3 (2 for minor tension).
- relevance: how useful the statement is for judging asset condition and
  maintenance risk.
- repetitiveness: 1 when the statement repeats the content of another
  statement, else 3 (2 for partial overlap).
- specificity: 3 when concrete, detailed, and anchored to data values;
  1 when generic.

Also assign two global results:
- overall_condition_valid: boolean, whether the Overall Condition is
  evidence-supported and compliant with AGENT-SPECIFICATIONS.
- completeness_insights and completeness_recommendations: each a number in
  [0, 1], the generated count relative to the expected count."""

JUDGE_OUTPUT_SCHEMA = """Respond with a single JSON object and nothing else:
{
  "statements": [
    {"statement_index": <1-based integer over insights then recommendations>,
     "kind": "<INSIGHT | RECOMMENDATION>",
     "factuality": <1|2|3>, "coherence": <1|2|3>, "relevance": <1|2|3>,
     "repetitiveness": <1|2|3>, "specificity": <1|2|3>,
     "justification": "<text>"},
    ...
  ],
  "overall_condition_valid": <true|false>,
  "completeness_insights": <number in [0,1]>,
  "completeness_recommendations": <number in [0,1]>
}"""

JUDGE_SYSTEM_PROMPT = "\n\n".join(
    [
        "You are a strict evaluation judge for maintenance condition reports. "
        "You evaluate only what is given: ground every score in the provided "
        "ASSET-FACTS, and do not generate any new content, insight, or "
        "recommendation beyond the evaluation itself.",
        JUDGE_OUTPUT_SCHEMA,
    ]
)


def render_judge_prompt(
    summary_document: str,
    facts: AssetFacts,
    agent_spec: str,
    *,
    summary_asset: str | None = None,
) -> tuple[str, str]:
    """Build (system_prompt, user_prompt) for one audit call.

    summary_document is the serialized output under audit; summary_asset,
    when the caller knows it, guards against judging mismatched artifacts.
    """
    asset_number = facts.asset_details_facts.asset_number
    if summary_asset is not None and summary_asset != asset_number:
        raise AssetMismatch(f"summary for {summary_asset} but facts for {asset_number}")
    user = "\n".join(
        [
            f"Evaluate this condition report for asset {asset_number}.",
            INSIGHTS_BEGIN,
            summary_document,
            INSIGHTS_END,
            FACTS_BEGIN,
            serialize_asset_facts(facts),
            FACTS_END,
            AGENT_SPEC_BEGIN,
            agent_spec,
            AGENT_SPEC_END,
            _JUDGE_RUBRICS,
        ]
    )
    return JUDGE_SYSTEM_PROMPT, user
