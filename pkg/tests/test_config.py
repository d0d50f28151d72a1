"""Config loading, validation, digest sensitivity, CLI overrides."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from condition_insight.config import (
    EvidenceScope,
    GatewayConfig,
    GatewayKind,
    PipelineConfig,
    config_digest,
    config_document,
    config_from_mapping,
    load_config,
    with_overrides,
)
from condition_insight.errors import (
    FormatError,
    InvalidEnum,
    MissingField,
    UnreadableFile,
)
from condition_insight.meters import AbstractionConfig
from condition_insight.prompts import PromptMode
from condition_insight.rules import RuleConfig
from condition_insight.transport import UotConfig

FULL_TOML = """
prompt_mode = "naive"
evidence_scope = "wo_only"
window_days = 180
top_k_fmea = 3
max_retries = 2
store_dir = "runs/store"
now = 2026-02-01T00:00:00Z
recency_tau_days = 90.0

[abstraction]
z_thresh = 2.5
k = 4.0
eps_flat = 0.5
min_points = 4
baseline_window = 10
flat_run_min = 2
exclude_resets_from_band = true

[uot]
epsilon = 0.01
rho_source = 5.0
rho_target = 2.0
max_iter = 500
tol = 1e-8

[rules]
min_workorders_for_assessment = 5
min_meters_for_assessment = 2
delayed_wo_threshold = 3
lookback_days = 120

[gateway]
kind = "remote"
endpoint = "https://llm.example/v1/chat"
model = "big-model"
token_env = "MY_TOKEN"

[judge_gateway]
kind = "mock"
"""


class TestDefaults:
    def test_default_config(self):
        cfg = PipelineConfig()
        assert cfg.prompt_mode is PromptMode.CONSTRAINED
        assert cfg.evidence_scope is EvidenceScope.ALL
        assert cfg.gateway.kind is GatewayKind.MOCK
        assert cfg.gateway.token_env == "GATEWAY_TOKEN"
        assert cfg.judge_gateway.token_env == "JUDGE_GATEWAY_TOKEN"
        assert cfg.window_days == 365
        assert cfg.max_retries == 1
        assert cfg.now is None

    def test_empty_mapping_gives_defaults(self):
        assert config_from_mapping({}) == PipelineConfig()

    @pytest.mark.parametrize(
        "overrides",
        [dict(window_days=0), dict(top_k_fmea=0), dict(max_retries=-1)],
    )
    def test_bounds_enforced(self, overrides):
        with pytest.raises(InvalidEnum):
            PipelineConfig(**overrides)

    def test_remote_gateway_requires_endpoint(self):
        with pytest.raises(MissingField):
            GatewayConfig(kind=GatewayKind.REMOTE)
        GatewayConfig(kind=GatewayKind.REMOTE, endpoint="https://x")

    def test_replay_gateway_requires_fixture_dir(self):
        with pytest.raises(MissingField):
            GatewayConfig(kind=GatewayKind.REPLAY)
        GatewayConfig(kind=GatewayKind.REPLAY, fixture_dir="fixtures")


class TestLoading:
    def test_full_toml(self, tmp_path):
        path = tmp_path / "pipeline.toml"
        path.write_text(FULL_TOML)
        cfg = load_config(path)
        assert cfg.prompt_mode is PromptMode.NAIVE
        assert cfg.evidence_scope is EvidenceScope.WO_ONLY
        assert cfg.window_days == 180
        assert cfg.top_k_fmea == 3
        assert cfg.max_retries == 2
        assert cfg.store_dir == "runs/store"
        assert cfg.now == datetime(2026, 2, 1, tzinfo=timezone.utc)
        assert cfg.recency_tau_days == 90.0
        assert cfg.abstraction == AbstractionConfig(
            z_thresh=2.5,
            k=4.0,
            eps_flat=0.5,
            min_points=4,
            baseline_window=10,
            flat_run_min=2,
            exclude_resets_from_band=True,
        )
        assert cfg.uot == UotConfig(
            epsilon=0.01, rho_source=5.0, rho_target=2.0, max_iter=500, tol=1e-8
        )
        assert cfg.rules == RuleConfig(
            min_workorders_for_assessment=5,
            min_meters_for_assessment=2,
            delayed_wo_threshold=3,
            lookback_days=120,
        )
        assert cfg.gateway == GatewayConfig(
            kind=GatewayKind.REMOTE,
            endpoint="https://llm.example/v1/chat",
            model="big-model",
            token_env="MY_TOKEN",
        )
        assert cfg.judge_gateway.kind is GatewayKind.MOCK
        assert cfg.judge_gateway.token_env == "JUDGE_GATEWAY_TOKEN"

    def test_enum_spellings_case_insensitive(self):
        cfg = config_from_mapping(
            {"prompt_mode": "constrained", "evidence_scope": "all", "gateway": {"kind": "MOCK"}}
        )
        assert cfg.prompt_mode is PromptMode.CONSTRAINED
        assert cfg.evidence_scope is EvidenceScope.ALL
        assert cfg.gateway.kind is GatewayKind.MOCK

    def test_bad_prompt_mode_rejected(self):
        with pytest.raises(InvalidEnum):
            config_from_mapping({"prompt_mode": "verbose"})

    def test_bad_scope_rejected(self):
        with pytest.raises(InvalidEnum):
            config_from_mapping({"evidence_scope": "meters_only"})

    def test_bad_gateway_kind_rejected(self):
        with pytest.raises(InvalidEnum):
            config_from_mapping({"gateway": {"kind": "carrier-pigeon"}})

    def test_scalar_section_rejected(self):
        with pytest.raises(InvalidEnum):
            config_from_mapping({"rules": 3})

    def test_now_accepts_string_timestamp(self):
        cfg = config_from_mapping({"now": "2026-01-15T12:00:00Z"})
        assert cfg.now == datetime(2026, 1, 15, 12, tzinfo=timezone.utc)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UnreadableFile):
            load_config(tmp_path / "absent.toml")

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("this is = not [valid\n")
        with pytest.raises(FormatError):
            load_config(path)

    def test_tokens_never_in_config_or_digest(self, tmp_path, monkeypatch):
        # Only the env var name is configuration; its value must not
        # influence the digest or appear in the document.
        path = tmp_path / "pipeline.toml"
        path.write_text(FULL_TOML)
        cfg = load_config(path)
        monkeypatch.setenv("MY_TOKEN", "hunter2")
        with_token = config_digest(cfg)
        monkeypatch.delenv("MY_TOKEN")
        assert config_digest(cfg) == with_token
        assert "hunter2" not in str(config_document(cfg))


class TestDigest:
    def test_stable_across_instances(self, tmp_path):
        path = tmp_path / "pipeline.toml"
        path.write_text(FULL_TOML)
        assert config_digest(load_config(path)) == config_digest(load_config(path))

    @pytest.mark.parametrize(
        "variant",
        [
            lambda: PipelineConfig(window_days=100),
            lambda: PipelineConfig(top_k_fmea=2),
            lambda: PipelineConfig(max_retries=3),
            lambda: PipelineConfig(prompt_mode=PromptMode.NAIVE),
            lambda: PipelineConfig(evidence_scope=EvidenceScope.WO_ONLY),
            lambda: PipelineConfig(now=datetime(2026, 1, 1, tzinfo=timezone.utc)),
            lambda: PipelineConfig(recency_tau_days=30.0),
            lambda: PipelineConfig(abstraction=AbstractionConfig(z_thresh=5.5)),
            lambda: PipelineConfig(uot=UotConfig(epsilon=0.5)),
            lambda: PipelineConfig(rules=RuleConfig(lookback_days=10)),
            lambda: PipelineConfig(gateway=GatewayConfig(model="other")),
            lambda: PipelineConfig(judge_gateway=GatewayConfig(token_env="J2")),
        ],
    )
    def test_sensitive_to_every_semantic_field(self, variant):
        assert config_digest(variant()) != config_digest(PipelineConfig())

    def test_store_dir_does_not_affect_digest(self):
        # Where results land is not part of what was computed.
        assert config_digest(PipelineConfig(store_dir="elsewhere")) == config_digest(
            PipelineConfig()
        )


class TestOverrides:
    def test_no_arguments_is_identity(self):
        cfg = PipelineConfig()
        assert with_overrides(cfg) == cfg

    def test_each_override_applies(self):
        cfg = with_overrides(
            PipelineConfig(),
            store_dir="elsewhere",
            prompt_mode=PromptMode.NAIVE,
            evidence_scope=EvidenceScope.WO_ONLY,
        )
        assert cfg.store_dir == "elsewhere"
        assert cfg.prompt_mode is PromptMode.NAIVE
        assert cfg.evidence_scope is EvidenceScope.WO_ONLY

    def test_gateway_kind_applies_to_both_gateways(self):
        base = PipelineConfig(
            gateway=GatewayConfig(kind=GatewayKind.REMOTE, endpoint="https://x", model="m"),
            judge_gateway=GatewayConfig(kind=GatewayKind.REMOTE, endpoint="https://y"),
        )
        cfg = with_overrides(base, gateway_kind=GatewayKind.MOCK)
        assert cfg.gateway.kind is GatewayKind.MOCK
        assert cfg.judge_gateway.kind is GatewayKind.MOCK
        # Other gateway fields survive the kind swap.
        assert cfg.gateway.endpoint == "https://x"
        assert cfg.gateway.model == "m"
        assert cfg.judge_gateway.endpoint == "https://y"
