"""Report emission: delimited tables, plain-text summaries, and figures.

Everything here is read-only over committed records. Figures render through
the Agg backend so reports work on headless machines.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .agent import condition_label, parse_insight
from .metrics import MetricsReport, render_metrics_table, serialize_metrics
from .model import ConditionCategory
from .pipeline import PortfolioReport
from .store import RunRecord

_CATEGORY_ORDER = (
    ConditionCategory.NORMAL,
    ConditionCategory.NEEDS_ATTENTION,
    ConditionCategory.NOT_ENOUGH_DATA,
)
_CATEGORY_LABELS = {
    ConditionCategory.NORMAL: "Normal",
    ConditionCategory.NEEDS_ATTENTION: "Needs Attention",
    ConditionCategory.NOT_ENOUGH_DATA: "Not Enough Data",
}
_CATEGORY_COLORS = {
    ConditionCategory.NORMAL: "#4c9f70",
    ConditionCategory.NEEDS_ATTENTION: "#d1495b",
    ConditionCategory.NOT_ENOUGH_DATA: "#8d99ae",
}


def _percent(count: int, total: int) -> float:
    return round(100.0 * count / total, 1) if total else 0.0


def render_distribution_table(report: PortfolioReport) -> str:
    """Category distribution overall and per site, percentages included."""
    lines = [f"Assets assessed: {report.n_assets}", "", "Category distribution:"]
    for category in _CATEGORY_ORDER:
        count = report.distribution.get(category.value, 0)
        lines.append(
            f"  {_CATEGORY_LABELS[category]:<16} {count:>5}  ({_percent(count, report.n_assets):5.1f}%)"
        )
    for site in sorted(report.by_site):
        counts = report.by_site[site]
        total = sum(counts.values())
        lines.append("")
        lines.append(f"Site {site} ({total} assets):")
        for category in _CATEGORY_ORDER:
            count = counts.get(category.value, 0)
            lines.append(
                f"  {_CATEGORY_LABELS[category]:<16} {count:>5}  ({_percent(count, total):5.1f}%)"
            )
    return "\n".join(lines) + "\n"


def _distribution_figure(report: PortfolioReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    labels = [_CATEGORY_LABELS[c] for c in _CATEGORY_ORDER]
    counts = [report.distribution.get(c.value, 0) for c in _CATEGORY_ORDER]
    colors = [_CATEGORY_COLORS[c] for c in _CATEGORY_ORDER]
    bars = ax.bar(labels, counts, color=colors)
    ax.bar_label(bars)
    ax.set_ylabel("assets")
    ax.set_title(f"Condition categories across {report.n_assets} assets")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _site_figure(report: PortfolioReport, path: Path) -> None:
    sites = sorted(report.by_site)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.8 * len(sites)), 4.0))
    bottoms = [0.0] * len(sites)
    for category in _CATEGORY_ORDER:
        values = [report.by_site[site].get(category.value, 0) for site in sites]
        ax.bar(
            sites,
            values,
            bottom=bottoms,
            label=_CATEGORY_LABELS[category],
            color=_CATEGORY_COLORS[category],
        )
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax.set_ylabel("assets")
    ax.set_title("Condition categories by site")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_portfolio_report(report: PortfolioReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    rows_path = out / "portfolio_assets.csv"
    with rows_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["asset_number", "site_id", "asset_class", "category", "resolution", "run_id"]
        )
        for row in report.rows:
            writer.writerow(
                [row.asset_number, row.site_id, row.asset_class,
                 row.category.value, row.resolution, row.run_id]
            )
    written.append(rows_path)

    dist_path = out / "portfolio_distribution.csv"
    with dist_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["segment", "segment_value", "category", "count", "percent"])
        for category in _CATEGORY_ORDER:
            count = report.distribution.get(category.value, 0)
            writer.writerow(
                ["all", "", category.value, count, _percent(count, report.n_assets)]
            )
        for site in sorted(report.by_site):
            total = sum(report.by_site[site].values())
            for category in _CATEGORY_ORDER:
                count = report.by_site[site].get(category.value, 0)
                writer.writerow(["site", site, category.value, count, _percent(count, total)])
        for cls in sorted(report.by_class):
            total = sum(report.by_class[cls].values())
            for category in _CATEGORY_ORDER:
                count = report.by_class[cls].get(category.value, 0)
                writer.writerow(
                    ["asset_class", cls, category.value, count, _percent(count, total)]
                )
    written.append(dist_path)

    summary_path = out / "portfolio_summary.txt"
    summary_path.write_text(render_distribution_table(report), encoding="utf-8")
    written.append(summary_path)

    figure_path = out / "category_distribution.png"
    _distribution_figure(report, figure_path)
    written.append(figure_path)
    if report.by_site:
        site_path = out / "site_distribution.png"
        _site_figure(report, site_path)
        written.append(site_path)
    return written


def render_insight_text(record: RunRecord) -> str:
    """Two-part insight sheet: observations first, then prioritized actions."""
    summary = parse_insight(record.summary_text)
    verification = record.verification
    confidence = f"Confidence: {summary.overall_confidence.value:.2f}"
    if summary.overall_confidence.reasoning:
        confidence += f" ({summary.overall_confidence.reasoning})"
    lines = [
        f"Asset {record.asset_number}",
        f"Overall condition: {condition_label(summary.overall_condition)}",
        confidence,
        f"Verification: {verification.get('resolution', '')}"
        f" (rule {verification.get('rule_category', '')},"
        f" attempt {verification.get('attempt', '')})",
        "",
        summary.overall_condition_explanation,
        "",
        "Observations:",
    ]
    for i, insight in enumerate(summary.key_insights, start=1):
        lines.append(f"  {i}. {insight}")
    if not summary.key_insights:
        lines.append("  (none)")
    lines.append("")
    lines.append("Recommended actions, highest priority first:")
    for i, recommendation in enumerate(summary.recommendations, start=1):
        lines.append(f"  {i}. {recommendation}")
    if not summary.recommendations:
        lines.append("  (none)")
    return "\n".join(lines) + "\n"


def write_insight_report(record: RunRecord, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"insight_{record.asset_number}.txt"
    path.write_text(render_insight_text(record), encoding="utf-8")
    return path


def _car_figure(reports: list[MetricsReport], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * len(reports)), 4.0))
    labels = [f"{r.prompt_mode.capitalize()}\n{r.evidence_scope}" for r in reports]
    ax.bar(range(len(reports)), [r.car for r in reports], color="#3a6ea5")
    ax.set_xticks(range(len(reports)), labels)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("condition agreement rate")
    ax.set_title("First-attempt agreement by configuration")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_metrics_report(
    reports: list[MetricsReport] | tuple[MetricsReport, ...], out_dir: str | Path
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = list(reports)
    written: list[Path] = []

    csv_path = out / "metrics.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["prompt_mode", "evidence_scope", "ucr", "hsr", "car", "mic", "cr", "rr",
             "post_retry_agreement", "n_assets", "n_statements", "backbone", "judge"]
        )
        for r in reports:
            writer.writerow(
                [r.prompt_mode, r.evidence_scope, r.ucr, r.hsr, r.car, r.mic, r.cr,
                 r.rr, r.post_retry_agreement, r.n_assets, r.n_statements,
                 r.backbone, r.judge]
            )
    written.append(csv_path)

    json_path = out / "metrics.json"
    json_path.write_text(serialize_metrics(reports) + "\n", encoding="utf-8")
    written.append(json_path)

    table_path = out / "metrics_table.txt"
    table_path.write_text(render_metrics_table(reports) + "\n", encoding="utf-8")
    written.append(table_path)

    figure_path = out / "car_by_configuration.png"
    _car_figure(reports, figure_path)
    written.append(figure_path)
    return written
