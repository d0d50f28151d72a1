"""Orchestration: evidence packet construction, runs, portfolios, evaluation.

Reference time resolution keeps runs reproducible: an explicit cfg.now wins,
otherwise the newest evidence timestamp in the store anchors the run, and an
empty store falls back to a fixed constant. Wall-clock time never leaks into
a packet, so identical stores produce identical packets.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from typing import Callable

from .agent import (
    LlmGateway,
    generate_insight_traced,
    parse_insight,
    serialize_summary,
)
from .config import EvidenceScope, GatewayConfig, GatewayKind, PipelineConfig, config_digest
from .embedding import HashedEmbeddingProvider
from .errors import ConditionInsightError, NoMatchingAssets, UnknownAsset
from .facts import AssetFacts, build_asset_facts, parse_asset_facts, serialize_asset_facts
from .gateway import RemoteGateway, ReplayGateway, RuleFaithfulMockGateway
from .judge import JudgeAudit, MockJudgeGateway, audit_document, audit_summary
from .alignment import align_failure_modes
from .meters import abstract_meter
from .metrics import (
    MetricsReport,
    aggregate_metrics,
    metrics_document,
    metrics_from_document,
)
from .model import (
    Alert,
    Asset,
    ConditionCategory,
    FmeaEntry,
    HealthScore,
    MeterSeries,
    WorkOrder,
    parse_timestamp,
    validate_alert,
    validate_asset,
    validate_fmea_entry,
    validate_meter_series,
    validate_work_order,
)
from .prompts import PromptMode
from .rules import Resolution, VerificationResult
from .store import (
    FileStore,
    RunRecord,
    document_digest,
    make_run_id,
    run_identity,
    run_record_document,
    run_record_from_document,
)
from .workorders import build_workorder_facts

# Last-resort reference time for a store with no dated evidence at all.
FALLBACK_NOW = datetime(2026, 1, 1, tzinfo=timezone.utc)

_EVIDENCE_CHANNELS = 4  # work orders, meters, alerts, FMEA matches


def open_store(cfg: PipelineConfig) -> FileStore:
    return FileStore(cfg.store_dir)


def build_gateway(gw: GatewayConfig, cfg: PipelineConfig) -> LlmGateway:
    if gw.kind is GatewayKind.MOCK:
        return RuleFaithfulMockGateway(cfg.rules)
    if gw.kind is GatewayKind.REPLAY:
        return ReplayGateway(gw.fixture_dir)
    return RemoteGateway(gw.endpoint, gw.model, token_env=gw.token_env)


def build_judge_gateway(gw: GatewayConfig, cfg: PipelineConfig) -> LlmGateway:
    if gw.kind is GatewayKind.MOCK:
        return MockJudgeGateway(cfg.rules)
    if gw.kind is GatewayKind.REPLAY:
        return ReplayGateway(gw.fixture_dir)
    return RemoteGateway(gw.endpoint, gw.model, token_env=gw.token_env)


def _gateway_tag(gw: GatewayConfig) -> str:
    return f"{gw.kind.value}:{gw.model}" if gw.model else gw.kind.value


def latest_evidence_timestamp(store: FileStore) -> datetime | None:
    """Newest timestamp across work orders, meter readings, and alerts."""
    latest: datetime | None = None

    def see(raw: object) -> None:
        nonlocal latest
        if not raw:
            return
        stamp = parse_timestamp(raw)
        if latest is None or stamp > latest:
            latest = stamp

    for _, record in store.items("workorders"):
        for field in ("reported_date", "target_date", "completion_date"):
            see(record.get(field))
    for _, record in store.items("meters"):
        for stamp, _value in record.get("readings") or ():
            see(stamp)
    for _, record in store.items("alerts"):
        see(record.get("raised_at"))
    return latest


def resolve_now(cfg: PipelineConfig, store: FileStore) -> datetime:
    if cfg.now is not None:
        return cfg.now
    return latest_evidence_timestamp(store) or FALLBACK_NOW


def load_evidence(
    store: FileStore, asset_number: str
) -> tuple[Asset, list[WorkOrder], list[MeterSeries], list[Alert], list[FmeaEntry]]:
    asset = validate_asset(store.require_asset(asset_number))
    orders = [
        validate_work_order(record)
        for record in store.documents("workorders")
        if record.get("asset_number") == asset_number
    ]
    series = [
        validate_meter_series(record)
        for record in store.documents("meters")
        if record.get("asset_number") == asset_number
    ]
    alerts = [
        validate_alert(record)
        for record in store.documents("alerts")
        if record.get("asset_number") == asset_number
    ]
    entries = [
        validate_fmea_entry(record)
        for record in store.documents("fmea")
        if asset.asset_class is None or record.get("asset_class") == asset.asset_class
    ]
    return asset, orders, series, alerts, entries


def build_packet(
    asset_number: str,
    cfg: PipelineConfig,
    store: FileStore,
    now: datetime | None = None,
) -> AssetFacts:
    """Assemble the evidence packet for one asset under the configured scope."""
    if now is None:
        now = resolve_now(cfg, store)
    asset, orders, series, alerts, entries = load_evidence(store, asset_number)

    wo_facts = build_workorder_facts(orders, cfg.window_days, now)

    meter_facts = []
    matches = []
    if cfg.evidence_scope is EvidenceScope.ALL:
        meter_facts = [abstract_meter(s, cfg.abstraction) for s in series]
        window_start = now - timedelta(days=cfg.window_days)
        aligned = [
            order
            for order in orders
            if order.description.strip() and window_start <= order.reported_date <= now
        ]
        if aligned and entries:
            matches = align_failure_modes(
                aligned,
                entries,
                HashedEmbeddingProvider(),
                cfg.uot,
                top_k=cfg.top_k_fmea,
                recency_tau_days=cfg.recency_tau_days,
                now=now,
            )

    populated = sum(
        1
        for present in (
            sum(wo_facts.counts.values()) > 0,
            bool(meter_facts),
            bool(alerts),
            bool(matches),
        )
        if present
    )
    scores = {
        "evidence_coverage": HealthScore(
            score_name="evidence_coverage",
            value=populated / _EVIDENCE_CHANNELS,
            range=(0.0, 1.0),
            meaning="fraction of evidence channels with any data in the window",
        )
    }

    return build_asset_facts(
        asset,
        wo_facts,
        meter_facts,
        alerts,
        matches,
        scores,
        cfg.window_days,
        now,
        fmea_entries=entries,
    )


def _verification_document(result: VerificationResult) -> dict[str, object]:
    return {
        "agree": result.agree,
        "attempt": result.attempt,
        "llm_category": result.llm_category.value,
        "resolution": result.resolution.value,
        "rule_category": result.rule_category.value,
    }


def verification_from_document(document: dict[str, object]) -> VerificationResult:
    return VerificationResult(
        rule_category=ConditionCategory(str(document["rule_category"])),
        llm_category=ConditionCategory(str(document["llm_category"])),
        agree=bool(document["agree"]),
        resolution=Resolution(str(document["resolution"])),
        attempt=int(document["attempt"]),  # type: ignore[arg-type]
    )


def run_insight(
    asset_number: str,
    cfg: PipelineConfig,
    *,
    store: FileStore | None = None,
    gateway: LlmGateway | None = None,
    now: datetime | None = None,
) -> RunRecord:
    """One asset end to end: packet, generation, verification, persistence."""
    if store is None:
        store = open_store(cfg)
    if gateway is None:
        gateway = build_gateway(cfg.gateway, cfg)
    if now is None:
        now = resolve_now(cfg, store)
    digest = config_digest(cfg)

    t_start = time.perf_counter()
    facts = build_packet(asset_number, cfg, store, now)
    facts_text = serialize_asset_facts(facts)
    t_facts = time.perf_counter()

    try:
        summary, result, trace = generate_insight_traced(
            facts, cfg.prompt_mode, gateway, cfg.rules, max_retries=cfg.max_retries
        )
    except ConditionInsightError as exc:
        # The failed attempt trail is still an auditable artifact.
        failure = {
            "asset_number": asset_number,
            "config_digest": digest,
            "error": f"{type(exc).__name__}: {exc}",
            "evidence_scope": cfg.evidence_scope.value,
            "facts_text": facts_text,
            "prompt_mode": cfg.prompt_mode.value,
        }
        store.put("runs", f"failed-{document_digest(failure)[:16]}", failure)
        raise
    t_generated = time.perf_counter()

    record = RunRecord(
        run_id="",
        asset_number=asset_number,
        config_digest=digest,
        prompt_mode=cfg.prompt_mode.value,
        evidence_scope=cfg.evidence_scope.value,
        facts_text=facts_text,
        prompts=trace.prompts,
        raw_responses=trace.raw_responses,
        summary_text=serialize_summary(summary),
        verification=_verification_document(result),
        timings={
            "facts_seconds": round(t_facts - t_start, 6),
            "generation_seconds": round(t_generated - t_facts, 6),
            "total_seconds": round(time.perf_counter() - t_start, 6),
        },
    )
    record = replace(record, run_id=make_run_id(run_identity(record)))
    store.put("runs", record.run_id, run_record_document(record))
    return record


@dataclass(frozen=True)
class PortfolioRow:
    asset_number: str
    site_id: str
    asset_class: str
    category: ConditionCategory
    resolution: str
    run_id: str


@dataclass(frozen=True)
class PortfolioReport:
    rows: tuple[PortfolioRow, ...]
    distribution: dict[str, int]
    by_site: dict[str, dict[str, int]]
    by_class: dict[str, dict[str, int]]
    n_assets: int


def match_site_class(
    site: str | None = None, asset_class: str | None = None
) -> Callable[[Asset], bool]:
    def predicate(asset: Asset) -> bool:
        if site is not None and asset.site_id != site:
            return False
        if asset_class is not None and asset.asset_class != asset_class:
            return False
        return True

    return predicate


def run_portfolio(
    cfg: PipelineConfig,
    asset_filter: Callable[[Asset], bool] | None = None,
    *,
    store: FileStore | None = None,
    gateway: LlmGateway | None = None,
    max_workers: int = 4,
) -> PortfolioReport:
    """Run every matching asset and aggregate the category distribution."""
    if store is None:
        store = open_store(cfg)
    if gateway is None:
        gateway = build_gateway(cfg.gateway, cfg)
    now = resolve_now(cfg, store)

    assets = [validate_asset(record) for record in store.documents("assets")]
    if asset_filter is not None:
        assets = [asset for asset in assets if asset_filter(asset)]
    if not assets:
        raise NoMatchingAssets("no assets match the portfolio filter")
    assets.sort(key=lambda asset: asset.asset_number)

    def one(asset: Asset) -> tuple[Asset, RunRecord]:
        record = run_insight(
            asset.asset_number, cfg, store=store, gateway=gateway, now=now
        )
        return asset, record

    results: list[tuple[Asset, RunRecord]] = []
    workers = max(1, min(max_workers, len(assets)))
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        for item in pool.map(one, assets):
            results.append(item)
    results.sort(key=lambda pair: pair[0].asset_number)

    rows = []
    distribution: dict[str, int] = {}
    by_site: dict[str, dict[str, int]] = {}
    by_class: dict[str, dict[str, int]] = {}
    for asset, record in results:
        # Both terminal resolutions leave the rule category standing.
        category = ConditionCategory(str(record.verification["rule_category"]))
        rows.append(
            PortfolioRow(
                asset_number=asset.asset_number,
                site_id=asset.site_id,
                asset_class=asset.asset_class or "",
                category=category,
                resolution=str(record.verification["resolution"]),
                run_id=record.run_id,
            )
        )
        distribution[category.value] = distribution.get(category.value, 0) + 1
        site_counts = by_site.setdefault(asset.site_id, {})
        site_counts[category.value] = site_counts.get(category.value, 0) + 1
        class_counts = by_class.setdefault(asset.asset_class or "", {})
        class_counts[category.value] = class_counts.get(category.value, 0) + 1

    return PortfolioReport(
        rows=tuple(rows),
        distribution=distribution,
        by_site=by_site,
        by_class=by_class,
        n_assets=len(rows),
    )


def run_evaluation(
    run_ids: list[str],
    cfg: PipelineConfig,
    *,
    store: FileStore | None = None,
    judge: LlmGateway | None = None,
) -> MetricsReport:
    """Judge the given runs and aggregate audit metrics into one report."""
    if store is None:
        store = open_store(cfg)
    if judge is None:
        judge = build_judge_gateway(cfg.judge_gateway, cfg)

    audits: list[JudgeAudit] = []
    verifications: list[VerificationResult] = []
    insight_counts: list[int] = []
    modes: set[str] = set()
    scopes: set[str] = set()

    for run_id in run_ids:
        document = store.get("runs", run_id)
        if document is None:
            raise KeyError(f"no run with id {run_id}")
        record = run_record_from_document(document)
        if not record.summary_text:
            raise ValueError(f"run {run_id} has no summary to judge")
        facts = parse_asset_facts(record.facts_text)
        summary = parse_insight(record.summary_text)
        agent_spec = record.prompts[-1][0] if record.prompts else ""
        audit = audit_summary(
            summary,
            facts,
            agent_spec,
            judge,
            summary_asset=facts.asset_details_facts.asset_number,
        )
        audits.append(audit)
        verifications.append(verification_from_document(record.verification))
        insight_counts.append(len(summary.key_insights))
        modes.add(record.prompt_mode)
        scopes.add(record.evidence_scope)

        record = replace(record, audit=audit_document(audit))
        store.put("runs", record.run_id, run_record_document(record))

    report = aggregate_metrics(
        audits,
        verifications,
        insight_counts,
        prompt_mode=modes.pop() if len(modes) == 1 else "mixed",
        evidence_scope=scopes.pop() if len(scopes) == 1 else "mixed",
        backbone=_gateway_tag(cfg.gateway),
        judge=_gateway_tag(cfg.judge_gateway),
    )
    evaluation = {
        "report": metrics_document(report),
        "run_ids": sorted(run_ids),
    }
    store.put("evaluations", document_digest(evaluation)[:16], evaluation)
    return report


def portfolio_from_store(
    cfg: PipelineConfig, store: FileStore | None = None
) -> PortfolioReport:
    """Rebuild the portfolio view from persisted runs of the current config.

    Read-only: no gateway calls. Raises NoMatchingAssets when nothing under
    this config digest has been run yet.
    """
    if store is None:
        store = open_store(cfg)
    digest = config_digest(cfg)
    assets = {
        record["asset_number"]: validate_asset(record)
        for record in store.documents("assets")
    }

    rows = []
    distribution: dict[str, int] = {}
    by_site: dict[str, dict[str, int]] = {}
    by_class: dict[str, dict[str, int]] = {}
    for run_id, document in store.items("runs"):
        if run_id.startswith("failed-") or document.get("config_digest") != digest:
            continue
        record = run_record_from_document(document)
        asset = assets.get(record.asset_number)
        category = ConditionCategory(str(record.verification["rule_category"]))
        site = asset.site_id if asset else ""
        asset_class = (asset.asset_class or "") if asset else ""
        rows.append(
            PortfolioRow(
                asset_number=record.asset_number,
                site_id=site,
                asset_class=asset_class,
                category=category,
                resolution=str(record.verification["resolution"]),
                run_id=run_id,
            )
        )
        distribution[category.value] = distribution.get(category.value, 0) + 1
        site_counts = by_site.setdefault(site, {})
        site_counts[category.value] = site_counts.get(category.value, 0) + 1
        class_counts = by_class.setdefault(asset_class, {})
        class_counts[category.value] = class_counts.get(category.value, 0) + 1
    if not rows:
        raise NoMatchingAssets("no persisted runs for the current configuration")
    rows.sort(key=lambda row: row.asset_number)

    return PortfolioReport(
        rows=tuple(rows),
        distribution=distribution,
        by_site=by_site,
        by_class=by_class,
        n_assets=len(rows),
    )


def evaluations_from_store(store: FileStore) -> list[MetricsReport]:
    return [
        metrics_from_document(document["report"])  # type: ignore[arg-type]
        for _, document in store.items("evaluations")
    ]


def run_ablation_grid(
    cfg: PipelineConfig,
    *,
    store: FileStore | None = None,
) -> list[MetricsReport]:
    """The 2x2 prompt-mode by evidence-scope grid, one report per cell."""
    if store is None:
        store = open_store(cfg)
    reports = []
    for mode in (PromptMode.NAIVE, PromptMode.CONSTRAINED):
        for scope in (EvidenceScope.WO_ONLY, EvidenceScope.ALL):
            cell = replace(cfg, prompt_mode=mode, evidence_scope=scope)
            portfolio = run_portfolio(cell, store=store)
            run_ids = [row.run_id for row in portfolio.rows]
            reports.append(run_evaluation(run_ids, cell, store=store))
    return reports
