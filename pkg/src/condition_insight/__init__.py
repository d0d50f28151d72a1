"""Maintenance evidence abstraction, aligned synthesis, and governed insight."""

from .agent import (
    ConditionInsightSummary,
    GenerationTrace,
    LlmGateway,
    generate_insight,
    generate_insight_traced,
    parse_insight,
    render_prompt,
    serialize_summary,
)
from .alignment import FmeaMatch, align_failure_modes
from .config import (
    EvidenceScope,
    GatewayConfig,
    GatewayKind,
    PipelineConfig,
    config_digest,
    load_config,
)
from .facts import (
    AssetFacts,
    build_asset_facts,
    parse_asset_facts,
    serialize_asset_facts,
)
from .gateway import (
    AdversarialNormalGateway,
    RemoteGateway,
    ReplayGateway,
    RuleFaithfulMockGateway,
)
from .ingest import IngestReport, ingest
from .judge import JudgeAudit, MockJudgeGateway, StatementScore, audit_summary
from .meters import AbstractionConfig, MeterFacts, abstract_meter
from .metrics import MetricsReport, aggregate_metrics, render_metrics_table
from .model import (
    Alert,
    Asset,
    ConditionCategory,
    FmeaEntry,
    HealthScore,
    MeterSeries,
    WorkOrder,
)
from .pipeline import (
    PortfolioReport,
    build_packet,
    run_ablation_grid,
    run_evaluation,
    run_insight,
    run_portfolio,
)
from .rules import (
    RuleConfig,
    RuleVerdict,
    VerificationResult,
    classify_condition,
    compute_car,
)
from .store import FileStore, RunRecord
from .synth import generate_synthetic_portfolio
from .transport import TransportPlan, UotConfig, solve_uot
from .workorders import WorkorderFacts, build_workorder_facts

__version__ = "0.1.0"

__all__ = [
    "AbstractionConfig",
    "AdversarialNormalGateway",
    "Alert",
    "Asset",
    "AssetFacts",
    "ConditionCategory",
    "ConditionInsightSummary",
    "EvidenceScope",
    "FileStore",
    "FmeaEntry",
    "FmeaMatch",
    "GatewayConfig",
    "GatewayKind",
    "GenerationTrace",
    "HealthScore",
    "IngestReport",
    "JudgeAudit",
    "LlmGateway",
    "MeterFacts",
    "MeterSeries",
    "MetricsReport",
    "MockJudgeGateway",
    "PipelineConfig",
    "PortfolioReport",
    "RemoteGateway",
    "ReplayGateway",
    "RuleConfig",
    "RuleFaithfulMockGateway",
    "RuleVerdict",
    "RunRecord",
    "StatementScore",
    "TransportPlan",
    "UotConfig",
    "VerificationResult",
    "WorkOrder",
    "WorkorderFacts",
    "abstract_meter",
    "aggregate_metrics",
    "align_failure_modes",
    "audit_summary",
    "build_asset_facts",
    "build_packet",
    "build_workorder_facts",
    "classify_condition",
    "compute_car",
    "config_digest",
    "generate_insight",
    "generate_insight_traced",
    "generate_synthetic_portfolio",
    "ingest",
    "load_config",
    "parse_asset_facts",
    "parse_insight",
    "render_metrics_table",
    "render_prompt",
    "run_ablation_grid",
    "run_evaluation",
    "run_insight",
    "run_portfolio",
    "serialize_asset_facts",
    "serialize_summary",
    "solve_uot",
]
