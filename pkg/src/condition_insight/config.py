"""Pipeline configuration: nested settings, TOML loading, content digest.

Secrets never live in the config file. The gateway sections name the
environment variable that holds the bearer token (GATEWAY_TOKEN and
JUDGE_GATEWAY_TOKEN by default); the digest therefore never captures a
credential.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from pathlib import Path

try:
    import tomllib  # type: ignore[import-not-found]
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]

from .errors import FormatError, InvalidEnum, MissingField, UnreadableFile
from .facts import canonical_json
from .meters import AbstractionConfig
from .model import parse_timestamp
from .prompts import PromptMode
from .rules import RuleConfig
from .transport import UotConfig


class EvidenceScope(str, Enum):
    """Evidence ablation axis: work orders only, or the full packet."""

    WO_ONLY = "WO_ONLY"
    ALL = "ALL"


class GatewayKind(str, Enum):
    REMOTE = "remote"
    MOCK = "mock"
    REPLAY = "replay"


@dataclass(frozen=True)
class GatewayConfig:
    kind: GatewayKind = GatewayKind.MOCK
    endpoint: str = ""
    model: str = ""
    token_env: str = "GATEWAY_TOKEN"
    fixture_dir: str = ""

    def __post_init__(self) -> None:
        if self.kind is GatewayKind.REMOTE and not self.endpoint:
            raise MissingField("gateway.endpoint")
        if self.kind is GatewayKind.REPLAY and not self.fixture_dir:
            raise MissingField("gateway.fixture_dir")


@dataclass(frozen=True)
class PipelineConfig:
    abstraction: AbstractionConfig = field(default_factory=AbstractionConfig)
    uot: UotConfig = field(default_factory=UotConfig)
    rules: RuleConfig = field(default_factory=RuleConfig)
    prompt_mode: PromptMode = PromptMode.CONSTRAINED
    evidence_scope: EvidenceScope = EvidenceScope.ALL
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    judge_gateway: GatewayConfig = field(
        default_factory=lambda: GatewayConfig(token_env="JUDGE_GATEWAY_TOKEN")
    )
    window_days: int = 365
    top_k_fmea: int = 5
    max_retries: int = 1
    store_dir: str = "store"
    # Evidence timestamps drive generated_at when now is unset; a fixed value
    # here pins the whole run for reproduction.
    now: datetime | None = None
    recency_tau_days: float | None = None

    def __post_init__(self) -> None:
        if self.window_days <= 0:
            raise InvalidEnum("window_days", self.window_days)
        if self.top_k_fmea < 1:
            raise InvalidEnum("top_k_fmea", self.top_k_fmea)
        if self.max_retries < 0:
            raise InvalidEnum("max_retries", self.max_retries)


def _gateway_document(cfg: GatewayConfig) -> dict[str, object]:
    return {
        "endpoint": cfg.endpoint,
        "fixture_dir": cfg.fixture_dir,
        "kind": cfg.kind.value,
        "model": cfg.model,
        "token_env": cfg.token_env,
    }


def config_document(cfg: PipelineConfig) -> dict[str, object]:
    """Full config as a plain document; the digest hashes this."""
    return {
        "abstraction": {
            "baseline_window": cfg.abstraction.baseline_window,
            "eps_flat": cfg.abstraction.eps_flat,
            "exclude_resets_from_band": cfg.abstraction.exclude_resets_from_band,
            "flat_run_min": cfg.abstraction.flat_run_min,
            "k": cfg.abstraction.k,
            "min_points": cfg.abstraction.min_points,
            "z_thresh": cfg.abstraction.z_thresh,
        },
        "evidence_scope": cfg.evidence_scope.value,
        "gateway": _gateway_document(cfg.gateway),
        "judge_gateway": _gateway_document(cfg.judge_gateway),
        "max_retries": cfg.max_retries,
        "now": cfg.now.isoformat() if cfg.now is not None else None,
        "prompt_mode": cfg.prompt_mode.value,
        "recency_tau_days": cfg.recency_tau_days,
        "rules": {
            "delayed_wo_threshold": cfg.rules.delayed_wo_threshold,
            "lookback_days": cfg.rules.lookback_days,
            "min_meters_for_assessment": cfg.rules.min_meters_for_assessment,
            "min_workorders_for_assessment": cfg.rules.min_workorders_for_assessment,
        },
        "top_k_fmea": cfg.top_k_fmea,
        "uot": {
            "epsilon": cfg.uot.epsilon,
            "max_iter": cfg.uot.max_iter,
            "rho_source": cfg.uot.rho_source,
            "rho_target": cfg.uot.rho_target,
            "tol": cfg.uot.tol,
        },
        "window_days": cfg.window_days,
    }


def config_digest(cfg: PipelineConfig) -> str:
    text = canonical_json(config_document(cfg))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _section(raw: dict[str, object], name: str) -> dict[str, object]:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise InvalidEnum(name, value)
    return value


def _gateway_from_section(
    section: dict[str, object], default_token_env: str
) -> GatewayConfig:
    kind_raw = str(section.get("kind", "mock")).lower()
    try:
        kind = GatewayKind(kind_raw)
    except ValueError:
        raise InvalidEnum("gateway.kind", kind_raw) from None
    return GatewayConfig(
        kind=kind,
        endpoint=str(section.get("endpoint", "")),
        model=str(section.get("model", "")),
        token_env=str(section.get("token_env", default_token_env)),
        fixture_dir=str(section.get("fixture_dir", "")),
    )


def config_from_mapping(raw: dict[str, object]) -> PipelineConfig:
    abstraction_raw = _section(raw, "abstraction")
    uot_raw = _section(raw, "uot")
    rules_raw = _section(raw, "rules")

    defaults = AbstractionConfig()
    abstraction = AbstractionConfig(
        z_thresh=float(abstraction_raw.get("z_thresh", defaults.z_thresh)),
        k=float(abstraction_raw.get("k", defaults.k)),
        eps_flat=float(abstraction_raw.get("eps_flat", defaults.eps_flat)),
        min_points=int(abstraction_raw.get("min_points", defaults.min_points)),
        baseline_window=(
            int(abstraction_raw["baseline_window"])
            if abstraction_raw.get("baseline_window") is not None
            else None
        ),
        flat_run_min=int(abstraction_raw.get("flat_run_min", defaults.flat_run_min)),
        exclude_resets_from_band=bool(
            abstraction_raw.get("exclude_resets_from_band", defaults.exclude_resets_from_band)
        ),
    )
    uot_defaults = UotConfig()
    uot = UotConfig(
        epsilon=float(uot_raw.get("epsilon", uot_defaults.epsilon)),
        rho_source=float(uot_raw.get("rho_source", uot_defaults.rho_source)),
        rho_target=float(uot_raw.get("rho_target", uot_defaults.rho_target)),
        max_iter=int(uot_raw.get("max_iter", uot_defaults.max_iter)),
        tol=float(uot_raw.get("tol", uot_defaults.tol)),
    )
    rule_defaults = RuleConfig()
    rules = RuleConfig(
        min_workorders_for_assessment=int(
            rules_raw.get("min_workorders_for_assessment", rule_defaults.min_workorders_for_assessment)
        ),
        min_meters_for_assessment=int(
            rules_raw.get("min_meters_for_assessment", rule_defaults.min_meters_for_assessment)
        ),
        delayed_wo_threshold=int(
            rules_raw.get("delayed_wo_threshold", rule_defaults.delayed_wo_threshold)
        ),
        lookback_days=int(rules_raw.get("lookback_days", rule_defaults.lookback_days)),
    )

    mode_raw = str(raw.get("prompt_mode", PromptMode.CONSTRAINED.value)).upper()
    try:
        prompt_mode = PromptMode(mode_raw)
    except ValueError:
        raise InvalidEnum("prompt_mode", mode_raw) from None
    scope_raw = str(raw.get("evidence_scope", EvidenceScope.ALL.value)).upper()
    try:
        evidence_scope = EvidenceScope(scope_raw)
    except ValueError:
        raise InvalidEnum("evidence_scope", scope_raw) from None

    now_raw = raw.get("now")
    now = parse_timestamp(now_raw) if now_raw else None
    tau_raw = raw.get("recency_tau_days")
    tau = float(tau_raw) if tau_raw is not None else None

    return PipelineConfig(
        abstraction=abstraction,
        uot=uot,
        rules=rules,
        prompt_mode=prompt_mode,
        evidence_scope=evidence_scope,
        gateway=_gateway_from_section(_section(raw, "gateway"), "GATEWAY_TOKEN"),
        judge_gateway=_gateway_from_section(
            _section(raw, "judge_gateway"), "JUDGE_GATEWAY_TOKEN"
        ),
        window_days=int(raw.get("window_days", 365)),
        top_k_fmea=int(raw.get("top_k_fmea", 5)),
        max_retries=int(raw.get("max_retries", 1)),
        store_dir=str(raw.get("store_dir", "store")),
        now=now,
        recency_tau_days=tau,
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise UnreadableFile(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(path, 0, f"not valid TOML: {exc}") from exc
    return config_from_mapping(raw)


def with_overrides(
    cfg: PipelineConfig,
    *,
    store_dir: str | None = None,
    prompt_mode: PromptMode | None = None,
    evidence_scope: EvidenceScope | None = None,
    gateway_kind: GatewayKind | None = None,
) -> PipelineConfig:
    """Apply CLI-level overrides on top of a loaded config."""
    out = cfg
    if store_dir is not None:
        out = replace(out, store_dir=store_dir)
    if prompt_mode is not None:
        out = replace(out, prompt_mode=prompt_mode)
    if evidence_scope is not None:
        out = replace(out, evidence_scope=evidence_scope)
    if gateway_kind is not None:
        out = replace(
            out,
            gateway=replace(out.gateway, kind=gateway_kind),
            judge_gateway=replace(out.judge_gateway, kind=gateway_kind),
        )
    return out
