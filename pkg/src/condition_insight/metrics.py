"""Aggregation of judge audits into the headline evaluation rates.

Rate definitions, over insights + recommendations unless stated:
unsupported-claim rate counts factuality 1; high-specificity rate counts
specificity 3; contradiction rate counts audited outputs containing any
coherence 1 (per output, not per statement); redundancy rate counts
repetitiveness 1; mean insight count averages insights per asset, insights
only. Condition agreement comes from the verifier results.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyInput, IndexMismatch
from .facts import canonical_json
from .judge import JudgeAudit
from .rules import VerificationResult, compute_car, compute_post_retry_agreement


@dataclass(frozen=True)
class MetricsReport:
    ucr: float
    hsr: float
    cr: float
    rr: float
    mic: float
    car: float
    post_retry_agreement: float
    n_assets: int
    n_statements: int
    prompt_mode: str = ""
    evidence_scope: str = ""
    backbone: str = ""
    judge: str = ""


def aggregate_metrics(
    audits: list[JudgeAudit] | tuple[JudgeAudit, ...],
    verifications: list[VerificationResult] | tuple[VerificationResult, ...],
    insight_counts: list[int] | tuple[int, ...],
    *,
    prompt_mode: str = "",
    evidence_scope: str = "",
    backbone: str = "",
    judge: str = "",
) -> MetricsReport:
    if not audits or not verifications or not insight_counts:
        raise EmptyInput("metrics need audits, verifications, and insight counts")
    if not len(audits) == len(verifications) == len(insight_counts):
        raise IndexMismatch(
            f"{len(audits)} audits, {len(verifications)} verifications,"
            f" {len(insight_counts)} insight counts"
        )
    statements = [s for audit in audits for s in audit.statements]
    total = len(statements)
    ucr = sum(1 for s in statements if s.factuality == 1) / total if total else 0.0
    hsr = sum(1 for s in statements if s.specificity == 3) / total if total else 0.0
    rr = sum(1 for s in statements if s.repetitiveness == 1) / total if total else 0.0
    cr = sum(
        1 for audit in audits if any(s.coherence == 1 for s in audit.statements)
    ) / len(audits)
    mic = sum(insight_counts) / len(insight_counts)
    return MetricsReport(
        ucr=ucr,
        hsr=hsr,
        cr=cr,
        rr=rr,
        mic=mic,
        car=compute_car(list(verifications)),
        post_retry_agreement=compute_post_retry_agreement(list(verifications)),
        n_assets=len(audits),
        n_statements=total,
        prompt_mode=prompt_mode,
        evidence_scope=evidence_scope,
        backbone=backbone,
        judge=judge,
    )


def metrics_document(report: MetricsReport) -> dict[str, object]:
    return {
        "backbone": report.backbone,
        "car": report.car,
        "cr": report.cr,
        "evidence_scope": report.evidence_scope,
        "hsr": report.hsr,
        "judge": report.judge,
        "mic": report.mic,
        "n_assets": report.n_assets,
        "n_statements": report.n_statements,
        "post_retry_agreement": report.post_retry_agreement,
        "prompt_mode": report.prompt_mode,
        "rr": report.rr,
        "ucr": report.ucr,
    }


def metrics_from_document(document: dict[str, object]) -> MetricsReport:
    return MetricsReport(
        ucr=float(document["ucr"]),  # type: ignore[arg-type]
        hsr=float(document["hsr"]),  # type: ignore[arg-type]
        cr=float(document["cr"]),  # type: ignore[arg-type]
        rr=float(document["rr"]),  # type: ignore[arg-type]
        mic=float(document["mic"]),  # type: ignore[arg-type]
        car=float(document["car"]),  # type: ignore[arg-type]
        post_retry_agreement=float(document["post_retry_agreement"]),  # type: ignore[arg-type]
        n_assets=int(document["n_assets"]),  # type: ignore[arg-type]
        n_statements=int(document["n_statements"]),  # type: ignore[arg-type]
        prompt_mode=str(document.get("prompt_mode", "")),
        evidence_scope=str(document.get("evidence_scope", "")),
        backbone=str(document.get("backbone", "")),
        judge=str(document.get("judge", "")),
    )


def serialize_metrics(reports: list[MetricsReport] | tuple[MetricsReport, ...]) -> str:
    return canonical_json({"reports": [metrics_document(r) for r in reports]})


_HEADER = ("Prompt", "Scope", "UCR", "HSR", "CAR", "MIC", "CR", "RR")


def _row(report: MetricsReport) -> tuple[str, ...]:
    return (
        report.prompt_mode.capitalize() or "-",
        {"WO_ONLY": "WO", "ALL": "All"}.get(report.evidence_scope, report.evidence_scope or "-"),
        f"{report.ucr:.3f}",
        f"{report.hsr:.2f}",
        f"{report.car:.2f}",
        f"{report.mic:.1f}",
        f"{report.cr:.2f}",
        f"{report.rr:.2f}",
    )


def render_metrics_table(reports: list[MetricsReport] | tuple[MetricsReport, ...]) -> str:
    """Plain-text table, one row per evaluated configuration."""
    rows = [_HEADER] + [_row(r) for r in reports]
    widths = [max(len(row[col]) for row in rows) for col in range(len(_HEADER))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0]), row[1].ljust(widths[1])]
        cells += [row[col].rjust(widths[col]) for col in range(2, len(row))]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)
