"""Command-line front end over the library pipeline."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import (
    EvidenceScope,
    GatewayKind,
    PipelineConfig,
    load_config,
    with_overrides,
)
from .errors import ConditionInsightError
from .facts import serialize_asset_facts
from .pipeline import (
    build_packet,
    evaluations_from_store,
    match_site_class,
    open_store,
    portfolio_from_store,
    run_ablation_grid,
    run_evaluation,
    run_insight,
    run_portfolio,
)
from .ingest import ingest as ingest_files
from .metrics import render_metrics_table
from .prompts import PromptMode
from .store import run_record_from_document
from .synth import generate_synthetic_portfolio

_MODE_FLAGS = {"constrained": PromptMode.CONSTRAINED, "naive": PromptMode.NAIVE}
_SCOPE_FLAGS = {"wo": EvidenceScope.WO_ONLY, "all": EvidenceScope.ALL}
_GATEWAY_FLAGS = {
    "remote": GatewayKind.REMOTE,
    "mock": GatewayKind.MOCK,
    "replay": GatewayKind.REPLAY,
}


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="TOML configuration file.")
@click.option("--store", "store_dir", type=click.Path(file_okay=False), default=None,
              help="Store directory; overrides the config value.")
@click.option("--mode", type=click.Choice(sorted(_MODE_FLAGS)), default=None,
              help="Prompt mode override.")
@click.option("--scope", type=click.Choice(sorted(_SCOPE_FLAGS)), default=None,
              help="Evidence scope override: wo (work orders only) or all.")
@click.option("--gateway", "gateway_kind", type=click.Choice(sorted(_GATEWAY_FLAGS)),
              default=None, help="Gateway kind override, applied to agent and judge.")
@click.option("--seed", type=int, default=1, show_default=True,
              help="Seed for synthetic generation.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, store_dir: str | None,
         mode: str | None, scope: str | None, gateway_kind: str | None, seed: int) -> None:
    """Condition insight pipeline: evidence to governed asset assessments."""
    cfg = load_config(config_path) if config_path else PipelineConfig()
    cfg = with_overrides(
        cfg,
        store_dir=store_dir,
        prompt_mode=_MODE_FLAGS[mode] if mode else None,
        evidence_scope=_SCOPE_FLAGS[scope] if scope else None,
        gateway_kind=_GATEWAY_FLAGS[gateway_kind] if gateway_kind else None,
    )
    ctx.obj = {"cfg": cfg, "seed": seed}


def _fail(exc: ConditionInsightError) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@main.command()
@click.argument("paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def ingest(obj: dict, paths: tuple[str, ...]) -> None:
    """Validate and load evidence files into the store."""
    cfg: PipelineConfig = obj["cfg"]
    try:
        report = ingest_files(list(paths), open_store(cfg))
    except ConditionInsightError as exc:
        _fail(exc)
        return
    click.echo(
        f"accepted {report.accepted}, rejected {report.rejected},"
        f" duplicates skipped {report.duplicates}"
    )
    for entity in sorted(report.by_entity):
        click.echo(f"  {entity}: {report.by_entity[entity]}")
    for reject in report.rejects:
        click.echo(f"  reject {reject.path}:{reject.line}: {reject.reason}", err=True)
    if report.reject_file:
        click.echo(f"rejects written to {report.reject_file}", err=True)


@main.command()
@click.argument("asset_number")
@click.pass_obj
def facts(obj: dict, asset_number: str) -> None:
    """Print the canonical evidence packet for one asset."""
    cfg: PipelineConfig = obj["cfg"]
    try:
        packet = build_packet(asset_number, cfg, open_store(cfg))
    except ConditionInsightError as exc:
        _fail(exc)
        return
    click.echo(serialize_asset_facts(packet))


@main.command()
@click.argument("asset_number")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Also write the insight sheet to this directory.")
@click.pass_obj
def insight(obj: dict, asset_number: str, out_dir: str | None) -> None:
    """Generate, verify, and persist one asset's condition insight."""
    from .report import render_insight_text, write_insight_report

    cfg: PipelineConfig = obj["cfg"]
    try:
        record = run_insight(asset_number, cfg)
    except ConditionInsightError as exc:
        _fail(exc)
        return
    click.echo(render_insight_text(record), nl=False)
    click.echo(f"\nrun id: {record.run_id}")
    if out_dir:
        path = write_insight_report(record, out_dir)
        click.echo(f"written to {path}")


@main.command()
@click.option("--site", default=None, help="Only assets at this site.")
@click.option("--asset-class", "asset_class", default=None,
              help="Only assets of this class.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Write the portfolio report files to this directory.")
@click.pass_obj
def portfolio(obj: dict, site: str | None, asset_class: str | None,
              out_dir: str | None) -> None:
    """Assess every matching asset and print the category distribution."""
    from .report import render_distribution_table, write_portfolio_report

    cfg: PipelineConfig = obj["cfg"]
    predicate = match_site_class(site, asset_class) if site or asset_class else None
    try:
        report = run_portfolio(cfg, predicate)
    except ConditionInsightError as exc:
        _fail(exc)
        return
    click.echo(render_distribution_table(report), nl=False)
    if out_dir:
        for path in write_portfolio_report(report, out_dir):
            click.echo(f"written {path}")


@main.command()
@click.argument("run_ids", nargs=-1)
@click.option("--grid", is_flag=True,
              help="Run the full prompt-mode by evidence-scope grid instead.")
@click.pass_obj
def evaluate(obj: dict, run_ids: tuple[str, ...], grid: bool) -> None:
    """Judge persisted runs and print the metrics table."""
    cfg: PipelineConfig = obj["cfg"]
    store = open_store(cfg)
    try:
        if grid:
            reports = run_ablation_grid(cfg, store=store)
        else:
            ids = list(run_ids)
            if not ids:
                ids = [
                    run_id for run_id in store.keys("runs")
                    if not run_id.startswith("failed-")
                ]
            if not ids:
                raise ConditionInsightError("no runs in the store to evaluate")
            reports = [run_evaluation(ids, cfg, store=store)]
    except ConditionInsightError as exc:
        _fail(exc)
        return
    click.echo(render_metrics_table(reports))


@main.command()
@click.option("--n-assets", "n_assets", type=int, default=20, show_default=True)
@click.option("--mix", "mix_text", default="", help=(
    "Scenario fractions, e.g. 'healthy=0.4,emergency=0.2,sparse=0.4'."
    " Unallocated mass goes to healthy."))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="synth",
              show_default=True)
@click.pass_obj
def synth(obj: dict, n_assets: int, mix_text: str, out_dir: str) -> None:
    """Generate seeded synthetic evidence files with known verdicts."""
    mix: dict[str, float] = {}
    for part in filter(None, (p.strip() for p in mix_text.split(","))):
        name, _, value = part.partition("=")
        try:
            mix[name.strip()] = float(value)
        except ValueError:
            raise click.BadParameter(f"bad mix entry: {part!r}") from None
    try:
        manifest = generate_synthetic_portfolio(obj["seed"], n_assets, mix, out_dir)
    except ConditionInsightError as exc:
        _fail(exc)
        return
    click.echo(f"wrote {len(manifest['files'])} files to {out_dir}")
    counts: dict[str, int] = {}
    for item in manifest["assets"]:
        counts[item["scenario"]] = counts.get(item["scenario"], 0) + 1
    for name in sorted(counts):
        click.echo(f"  {name}: {counts[name]}")


@main.command()
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="report",
              show_default=True)
@click.pass_obj
def report(obj: dict, out_dir: str) -> None:
    """Render tables and figures from persisted runs; makes no gateway calls."""
    from .report import write_insight_report, write_metrics_report, write_portfolio_report

    cfg: PipelineConfig = obj["cfg"]
    store = open_store(cfg)
    try:
        portfolio_report = portfolio_from_store(cfg, store)
    except ConditionInsightError as exc:
        _fail(exc)
        return
    written = write_portfolio_report(portfolio_report, out_dir)
    for row in portfolio_report.rows:
        document = store.get("runs", row.run_id)
        if document:
            written.append(
                write_insight_report(run_record_from_document(document), Path(out_dir) / "insights")
            )
    evaluations = evaluations_from_store(store)
    if evaluations:
        written += write_metrics_report(evaluations, out_dir)
    for path in written:
        click.echo(f"written {path}")


if __name__ == "__main__":
    main()
