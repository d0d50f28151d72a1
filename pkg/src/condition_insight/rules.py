"""Deterministic condition classification and the generation check.

The rule pass runs beside the language model, never downstream of it: the
model's category is compared against the rule category, disagreements get
one shot at self-correction, and the rule category wins any final conflict.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta
from enum import Enum

from .errors import EmptyInput
from .facts import AssetFacts
from .meters import MeterEventKind
from .model import AlertSeverity, AssetStatus, ConditionCategory, WorkOrderStatus, WorkOrderType

RULE_NOT_ENOUGH_DATA = "not_enough_data"
RULE_OPEN_EMERGENCY_WO = "open_emergency_wo"
RULE_DELAYED_WORKORDERS = "delayed_workorders"
RULE_ACTIVE_CRITICAL_ALERT = "active_critical_alert"
RULE_METER_ANOMALY = "meter_anomaly"
RULE_DOWN_WHILE_RUNNING = "down_while_running_inconsistency"

ATTENTION_RULES = (
    RULE_OPEN_EMERGENCY_WO,
    RULE_DELAYED_WORKORDERS,
    RULE_ACTIVE_CRITICAL_ALERT,
    RULE_METER_ANOMALY,
    RULE_DOWN_WHILE_RUNNING,
)
ALL_RULES = (RULE_NOT_ENOUGH_DATA,) + ATTENTION_RULES

_ANOMALY_KINDS = frozenset(
    {MeterEventKind.Z_SCORE_ANOMALY, MeterEventKind.RESET, MeterEventKind.RATE_ANOMALY}
)
_OPEN_STATUSES = frozenset({WorkOrderStatus.OPEN, WorkOrderStatus.IN_PROGRESS})


class Resolution(str, Enum):
    ACCEPTED = "ACCEPTED"
    RETRIED = "RETRIED"
    OVERRIDDEN = "OVERRIDDEN"


@dataclass(frozen=True)
class RuleConfig:
    min_workorders_for_assessment: int = 3
    min_meters_for_assessment: int = 1
    delayed_wo_threshold: int = 2
    lookback_days: int = 200

    def __post_init__(self) -> None:
        for name in (
            "min_workorders_for_assessment",
            "min_meters_for_assessment",
            "delayed_wo_threshold",
            "lookback_days",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class TriggeredRule:
    rule_id: str
    evidence: str


@dataclass(frozen=True)
class RuleVerdict:
    category: ConditionCategory
    triggered_rules: tuple[TriggeredRule, ...]


@dataclass(frozen=True)
class VerificationResult:
    """Outcome of one generation-versus-rules comparison.

    attempt records which gateway call produced the compared category, so
    first-attempt agreement stays measurable after retries.
    """

    rule_category: ConditionCategory
    llm_category: ConditionCategory
    agree: bool
    resolution: Resolution
    attempt: int = 1


def _open_emergency_count(facts: AssetFacts) -> int:
    digests = (
        facts.workorder_facts.preventive_workorders
        + facts.workorder_facts.corrective_and_other_workorders
    )
    return sum(
        1
        for d in digests
        if d.wo_type is WorkOrderType.EMERGENCY and d.status in _OPEN_STATUSES
    )


def _recent_anomalies(facts: AssetFacts, lookback_days: int) -> list[str]:
    horizon = facts.generated_at - timedelta(days=lookback_days)
    hits = []
    for meter in facts.meter_facts:
        for event in meter.events:
            if event.kind in _ANOMALY_KINDS and event.timestamp >= horizon:
                hits.append(f"{meter.meter_name}:{event.kind.value}@{event.index}")
    return hits


def classify_condition(facts: AssetFacts, rules: RuleConfig) -> RuleVerdict:
    """Fixed-order evaluation: data sufficiency, then attention triggers.

    The sufficiency gate requires every evidence source to be thin at once;
    a single alert is enough to force a full assessment.
    """
    wo_count = sum(facts.workorder_facts.counts.values())
    usable_meters = sum(1 for m in facts.meter_facts if not m.insufficient_data)
    if (
        wo_count < rules.min_workorders_for_assessment
        and usable_meters < rules.min_meters_for_assessment
        and not facts.alert_facts
    ):
        return RuleVerdict(
            category=ConditionCategory.NOT_ENOUGH_DATA,
            triggered_rules=(
                TriggeredRule(
                    RULE_NOT_ENOUGH_DATA,
                    f"{wo_count} work orders (need {rules.min_workorders_for_assessment}), "
                    f"{usable_meters} usable meters (need {rules.min_meters_for_assessment}), "
                    "0 alerts",
                ),
            ),
        )

    fired: list[TriggeredRule] = []
    open_emergencies = _open_emergency_count(facts)
    if open_emergencies >= 1:
        fired.append(
            TriggeredRule(RULE_OPEN_EMERGENCY_WO, f"{open_emergencies} open emergency work orders")
        )
    delayed = facts.workorder_facts.delayed_count
    if delayed >= rules.delayed_wo_threshold:
        fired.append(
            TriggeredRule(
                RULE_DELAYED_WORKORDERS,
                f"{delayed} delayed work orders (threshold {rules.delayed_wo_threshold})",
            )
        )
    critical = [
        a for a in facts.alert_facts if a.active and a.severity is AlertSeverity.CRITICAL
    ]
    if critical:
        fired.append(
            TriggeredRule(
                RULE_ACTIVE_CRITICAL_ALERT,
                ", ".join(a.alert_id for a in critical),
            )
        )
    anomalies = _recent_anomalies(facts, rules.lookback_days)
    if anomalies:
        fired.append(TriggeredRule(RULE_METER_ANOMALY, ", ".join(anomalies)))
    details = facts.asset_details_facts
    if details.status is AssetStatus.DOWN and details.is_running:
        fired.append(
            TriggeredRule(RULE_DOWN_WHILE_RUNNING, "status DOWN while is_running is true")
        )

    if fired:
        return RuleVerdict(ConditionCategory.NEEDS_ATTENTION, tuple(fired))
    return RuleVerdict(ConditionCategory.NORMAL, ())


def compare_conditions(
    rule: RuleVerdict, llm: ConditionCategory, attempt: int, max_retries: int
) -> VerificationResult:
    if attempt < 1:
        raise ValueError("attempt starts at 1")
    agree = rule.category is llm
    if agree:
        resolution = Resolution.ACCEPTED
    elif attempt <= max_retries:
        resolution = Resolution.RETRIED
    else:
        resolution = Resolution.OVERRIDDEN
    return VerificationResult(
        rule_category=rule.category,
        llm_category=llm,
        agree=agree,
        resolution=resolution,
        attempt=attempt,
    )


def compute_car(results: list[VerificationResult] | tuple[VerificationResult, ...]) -> float:
    """Fraction of assets whose first gateway attempt matched the rules."""
    if not results:
        raise EmptyInput("no verification results")
    return sum(1 for r in results if r.agree and r.attempt == 1) / len(results)


def compute_post_retry_agreement(
    results: list[VerificationResult] | tuple[VerificationResult, ...],
) -> float:
    """Agreement after feedback retries, before any rule override."""
    if not results:
        raise EmptyInput("no verification results")
    return sum(1 for r in results if r.agree) / len(results)
