"""Structured audit of generated summaries.

A judge call scores every insight and recommendation on five 1-3 rubrics
plus two global results. The deterministic mock judge exists so the whole
evaluation pipeline runs offline; it scores by transparent text heuristics
and makes no claim of matching any particular model's judgment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum

from .agent import ConditionInsightSummary, LlmGateway, parse_insight, serialize_summary
from .errors import (
    ScoreOutOfRange,
    SchemaViolation,
    StatementCountMismatch,
)
from .facts import AssetFacts, parse_asset_facts
from .prompts import (
    FACTS_BEGIN,
    FACTS_END,
    INSIGHTS_BEGIN,
    INSIGHTS_END,
    extract_block,
    render_judge_prompt,
)
from .rules import RuleConfig, classify_condition

JUDGE_TEMPERATURE = 0.0

EXPECTED_INSIGHTS = 3
EXPECTED_RECOMMENDATIONS = 2

_WORD_RE = re.compile(r"[a-z0-9]+")
_HEDGE_WORDS = frozenset(
    {"likely", "probably", "possibly", "maybe", "perhaps", "seems", "seem", "could"}
)


class StatementKind(str, Enum):
    INSIGHT = "INSIGHT"
    RECOMMENDATION = "RECOMMENDATION"


@dataclass(frozen=True)
class StatementScore:
    statement_index: int
    kind: StatementKind
    factuality: int
    coherence: int
    relevance: int
    repetitiveness: int
    specificity: int
    justification: str

    def __post_init__(self) -> None:
        for name in ("factuality", "coherence", "relevance", "repetitiveness", "specificity"):
            value = getattr(self, name)
            if value not in (1, 2, 3):
                raise ScoreOutOfRange(f"{name} = {value}")


@dataclass(frozen=True)
class JudgeAudit:
    asset_number: str
    statements: tuple[StatementScore, ...]
    overall_condition_valid: bool
    completeness_insights: float
    completeness_recommendations: float


def audit_document(audit: JudgeAudit) -> dict[str, object]:
    """Plain-document form of an audit for persistence."""
    return {
        "asset_number": audit.asset_number,
        "completeness_insights": audit.completeness_insights,
        "completeness_recommendations": audit.completeness_recommendations,
        "overall_condition_valid": audit.overall_condition_valid,
        "statements": [
            {
                "coherence": s.coherence,
                "factuality": s.factuality,
                "justification": s.justification,
                "kind": s.kind.value,
                "relevance": s.relevance,
                "repetitiveness": s.repetitiveness,
                "specificity": s.specificity,
                "statement_index": s.statement_index,
            }
            for s in audit.statements
        ],
    }


def audit_from_document(document: dict[str, object]) -> JudgeAudit:
    statements = tuple(
        StatementScore(
            statement_index=int(s["statement_index"]),
            kind=StatementKind(str(s["kind"])),
            factuality=int(s["factuality"]),
            coherence=int(s["coherence"]),
            relevance=int(s["relevance"]),
            repetitiveness=int(s["repetitiveness"]),
            specificity=int(s["specificity"]),
            justification=str(s["justification"]),
        )
        for s in document["statements"]  # type: ignore[union-attr]
    )
    return JudgeAudit(
        asset_number=str(document["asset_number"]),
        statements=statements,
        overall_condition_valid=bool(document["overall_condition_valid"]),
        completeness_insights=float(document["completeness_insights"]),  # type: ignore[arg-type]
        completeness_recommendations=float(document["completeness_recommendations"]),  # type: ignore[arg-type]
    )


def parse_judge_output(raw: str, expected_statements: int, asset_number: str = "") -> JudgeAudit:
    """Parse one audit document, holding it to the expected statement count."""
    if expected_statements < 0:
        raise ValueError("expected_statements must be non-negative")
    try:
        document = json.loads(raw)
    except json.JSONDecodeError:
        start = raw.find("{")
        if start < 0:
            raise SchemaViolation("no JSON object in judge output") from None
        try:
            document, _ = json.JSONDecoder().raw_decode(raw, start)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"judge output not parseable: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaViolation("judge output must be an object")
    for key in (
        "statements",
        "overall_condition_valid",
        "completeness_insights",
        "completeness_recommendations",
    ):
        if key not in document:
            raise SchemaViolation(f"judge output missing {key}")
    raw_statements = document["statements"]
    if not isinstance(raw_statements, list):
        raise SchemaViolation("statements must be a list")
    statements = []
    for entry in raw_statements:
        if not isinstance(entry, dict):
            raise SchemaViolation("each statement score must be an object")
        try:
            scores = {
                name: int(entry[name])
                for name in (
                    "factuality",
                    "coherence",
                    "relevance",
                    "repetitiveness",
                    "specificity",
                )
            }
            statements.append(
                StatementScore(
                    statement_index=int(entry["statement_index"]),
                    kind=StatementKind(entry["kind"]),
                    justification=str(entry.get("justification", "")),
                    **scores,
                )
            )
        except KeyError as exc:
            raise SchemaViolation(f"statement score missing {exc}") from exc
        except ValueError as exc:
            raise SchemaViolation(f"bad statement score field: {exc}") from exc
    if len(statements) != expected_statements:
        raise StatementCountMismatch(expected_statements, len(statements))
    return JudgeAudit(
        asset_number=asset_number,
        statements=tuple(statements),
        overall_condition_valid=bool(document["overall_condition_valid"]),
        completeness_insights=float(document["completeness_insights"]),
        completeness_recommendations=float(document["completeness_recommendations"]),
    )


def _tokens(text: str) -> set[str]:
    return set(_WORD_RE.findall(text.lower()))


def _grounding(statement: str, evidence_tokens: set[str]) -> float:
    words = _tokens(statement)
    if not words:
        return 0.0
    return len(words & evidence_tokens) / len(words)


def _score_statement(
    statement: str,
    index: int,
    kind: StatementKind,
    evidence_tokens: set[str],
    earlier: list[set[str]],
    condition_is_calm: bool,
) -> StatementScore:
    words = _tokens(statement)
    support = _grounding(statement, evidence_tokens)
    hedged = bool(words & _HEDGE_WORDS)
    if support >= 0.5 and not hedged:
        factuality = 3
    elif support >= 0.25:
        factuality = 2
    else:
        factuality = 1
    has_number = any(ch.isdigit() for ch in statement)
    if has_number and support >= 0.4:
        specificity = 3
    elif has_number or support >= 0.4:
        specificity = 2
    else:
        specificity = 1
    repetitiveness = 3
    for seen in earlier:
        union = words | seen
        if union and len(words & seen) / len(union) >= 0.6:
            repetitiveness = 1
            break
    alarming = bool(words & {"emergency", "critical", "abnormal", "delayed", "problems"})
    coherence = 1 if (condition_is_calm and alarming and kind is StatementKind.INSIGHT) else 3
    relevance = 3 if support > 0 else 2
    return StatementScore(
        statement_index=index,
        kind=kind,
        factuality=factuality,
        coherence=coherence,
        relevance=relevance,
        repetitiveness=repetitiveness,
        specificity=specificity,
        justification=f"token support {support:.2f}; hedged {hedged}; numeric {has_number}",
    )


def audit_summary(
    summary: ConditionInsightSummary,
    facts: AssetFacts,
    agent_spec: str,
    gateway: LlmGateway,
    *,
    summary_asset: str | None = None,
) -> JudgeAudit:
    """Render the audit prompt, call the judge, parse and size-check."""
    system, user = render_judge_prompt(
        serialize_summary(summary), facts, agent_spec, summary_asset=summary_asset
    )
    raw = gateway.complete(system, user, JUDGE_TEMPERATURE)
    expected = len(summary.key_insights) + len(summary.recommendations)
    return parse_judge_output(raw, expected, facts.asset_details_facts.asset_number)


class MockJudgeGateway:
    """Deterministic judge: scores by token overlap with the evidence.

    Grounded, numeric, non-repetitive statements score high; hedged or
    vague ones score low. Condition validity is checked against the same
    rule engine the verifier uses.
    """

    def __init__(self, rules: RuleConfig | None = None) -> None:
        self.rules = rules if rules is not None else RuleConfig()

    def complete(self, system_prompt: str, user_prompt: str, temperature: float) -> str:
        summary_doc = extract_block(user_prompt, INSIGHTS_BEGIN, INSIGHTS_END)
        facts_doc = extract_block(user_prompt, FACTS_BEGIN, FACTS_END)
        if summary_doc is None or facts_doc is None:
            raise SchemaViolation("judge prompt missing required blocks")
        summary = parse_insight(summary_doc)
        facts = parse_asset_facts(facts_doc)
        evidence_tokens = _tokens(facts_doc)
        verdict = classify_condition(facts, self.rules)
        condition_is_calm = summary.overall_condition.value != "NEEDS_ATTENTION"
        statements = []
        earlier: list[set[str]] = []
        index = 0
        for kind, items in (
            (StatementKind.INSIGHT, summary.key_insights),
            (StatementKind.RECOMMENDATION, summary.recommendations),
        ):
            for text in items:
                index += 1
                statements.append(
                    _score_statement(text, index, kind, evidence_tokens, earlier, condition_is_calm)
                )
                earlier.append(_tokens(text))
        document = {
            "statements": [
                {
                    "statement_index": s.statement_index,
                    "kind": s.kind.value,
                    "factuality": s.factuality,
                    "coherence": s.coherence,
                    "relevance": s.relevance,
                    "repetitiveness": s.repetitiveness,
                    "specificity": s.specificity,
                    "justification": s.justification,
                }
                for s in statements
            ],
            "overall_condition_valid": summary.overall_condition is verdict.category,
            "completeness_insights": round(
                min(1.0, len(summary.key_insights) / EXPECTED_INSIGHTS), 4
            ),
            "completeness_recommendations": round(
                min(1.0, len(summary.recommendations) / EXPECTED_RECOMMENDATIONS), 4
            ),
        }
        return json.dumps(document, indent=1, sort_keys=True)
