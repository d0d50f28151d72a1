"""Shared builders for hand-constructed evidence fixtures."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from condition_insight.facts import AssetFacts, build_asset_facts
from condition_insight.meters import AbstractionConfig, abstract_meter
from condition_insight.model import (
    Alert,
    AlertSeverity,
    Asset,
    AssetStatus,
    HealthScore,
    MeterSeries,
    MeterType,
    WorkOrder,
    WorkOrderStatus,
    WorkOrderType,
)
from condition_insight.workorders import build_workorder_facts

NOW = datetime(2026, 2, 1, tzinfo=timezone.utc)
WINDOW_DAYS = 365


def day(offset: int) -> datetime:
    return NOW + timedelta(days=offset)


def make_asset(number: str = "A-100", **overrides) -> Asset:
    base = dict(
        asset_number=number,
        description="centrifugal pump",
        site_id="SITE-A",
        priority=3,
        status=AssetStatus.OPERATING,
        is_running=True,
        failure_code=None,
        asset_age_in_years=7.5,
        manufacturer="ACME",
        asset_class="PUMP",
    )
    base.update(overrides)
    return Asset(**base)


def make_order(
    wonum: str,
    asset: str = "A-100",
    wo_type: WorkOrderType = WorkOrderType.PREVENTIVE,
    status: WorkOrderStatus = WorkOrderStatus.COMPLETED,
    reported_offset: int = -60,
    target_offset: int | None = -46,
    completion_offset: int | None = -46,
    description: str = "routine inspection",
    problem_code: str | None = None,
) -> WorkOrder:
    return WorkOrder(
        wonum=wonum,
        asset_number=asset,
        wo_type=wo_type,
        status=status,
        reported_date=day(reported_offset),
        target_date=day(target_offset) if target_offset is not None else None,
        completion_date=day(completion_offset) if completion_offset is not None else None,
        description=description,
        problem_code=problem_code,
    )


def make_alert(
    alert_id: str = "AL-1",
    asset: str = "A-100",
    severity: AlertSeverity = AlertSeverity.CRITICAL,
    raised_offset: int = -5,
    active: bool = True,
    message: str = "bearing temperature high",
) -> Alert:
    return Alert(
        alert_id=alert_id,
        asset_number=asset,
        severity=severity,
        raised_at=day(raised_offset),
        active=active,
        message=message,
    )


def make_gauge(
    asset: str = "A-100",
    name: str = "temp",
    values: tuple[float, ...] = (50.0, 51.0, 52.0, 53.0, 54.0, 55.0),
    start_offset: int = -30,
    step_days: int = 2,
) -> MeterSeries:
    readings = tuple(
        (day(start_offset + i * step_days), float(v)) for i, v in enumerate(values)
    )
    return MeterSeries(asset, name, MeterType.GAUGE, "degC", readings)


def make_continuous(
    asset: str = "A-100",
    name: str = "run_hours",
    values: tuple[float, ...] = (100.0, 124.0, 148.0, 172.0, 196.0, 220.0),
    start_offset: int = -30,
    step_days: int = 2,
) -> MeterSeries:
    readings = tuple(
        (day(start_offset + i * step_days), float(v)) for i, v in enumerate(values)
    )
    return MeterSeries(asset, name, MeterType.CONTINUOUS, "h", readings)


def packet(
    asset: Asset | None = None,
    orders: list[WorkOrder] = (),
    series: list[MeterSeries] = (),
    alerts: list[Alert] = (),
    scores: dict[str, HealthScore] | None = None,
    now: datetime = NOW,
    window_days: int = WINDOW_DAYS,
    abstraction: AbstractionConfig | None = None,
) -> AssetFacts:
    """Assemble a packet from raw parts with no FMEA alignment."""
    asset = asset or make_asset()
    cfg = abstraction or AbstractionConfig()
    wo_facts = build_workorder_facts(list(orders), window_days, now)
    meter_facts = [abstract_meter(s, cfg) for s in series]
    return build_asset_facts(
        asset, wo_facts, meter_facts, list(alerts), [], scores or {}, window_days, now
    )


# A spread of ready packets keyed by the scenario they exercise. Values are
# (facts, expected category name, expected rule ids).
def golden_packets() -> list[tuple[str, AssetFacts, str, tuple[str, ...]]]:
    three_pms = [
        make_order("PM-1", reported_offset=-200, target_offset=-186, completion_offset=-186),
        make_order("PM-2", reported_offset=-120, target_offset=-106, completion_offset=-106),
        make_order("PM-3", reported_offset=-40, target_offset=-26, completion_offset=-26),
    ]
    calm = make_gauge()
    spiked = make_gauge(values=(50.0, 50.4, 49.7, 50.2, 49.9, 50.1, 50.3, 49.8, 78.0))
    old_spiked = make_gauge(
        values=(50.0, 50.4, 49.7, 50.2, 49.9, 50.1, 50.3, 49.8, 78.0),
        start_offset=-300,
        step_days=1,
    )
    open_em = make_order(
        "EM-1",
        wo_type=WorkOrderType.EMERGENCY,
        status=WorkOrderStatus.OPEN,
        reported_offset=-3,
        target_offset=30,
        completion_offset=None,
        description="unit tripped, seal leaking badly",
        problem_code="LEAK",
    )
    in_progress_em = make_order(
        "EM-2",
        wo_type=WorkOrderType.EMERGENCY,
        status=WorkOrderStatus.IN_PROGRESS,
        reported_offset=-2,
        target_offset=30,
        completion_offset=None,
        description="motor smoking at startup",
        problem_code="ELEC",
    )
    completed_em = make_order(
        "EM-3",
        wo_type=WorkOrderType.EMERGENCY,
        status=WorkOrderStatus.COMPLETED,
        reported_offset=-90,
        target_offset=-83,
        completion_offset=-83,
        description="emergency repair finished",
        problem_code="LEAK",
    )
    late_1 = make_order(
        "CM-1",
        wo_type=WorkOrderType.CORRECTIVE,
        reported_offset=-100,
        target_offset=-93,
        completion_offset=-80,
        description="replace worn coupling",
        problem_code="WEAR",
    )
    late_2 = make_order(
        "CM-2",
        wo_type=WorkOrderType.CORRECTIVE,
        reported_offset=-70,
        target_offset=-63,
        completion_offset=-50,
        description="align shaft after vibration",
        problem_code="VIB",
    )
    critical = make_alert()
    inactive_critical = make_alert(alert_id="AL-2", active=False)
    warn = make_alert(alert_id="AL-3", severity=AlertSeverity.WARNING)
    down_asset = make_asset(status=AssetStatus.DOWN, is_running=True)

    cases: list[tuple[str, AssetFacts, str, tuple[str, ...]]] = [
        ("normal_three_pms", packet(orders=three_pms), "NORMAL", ()),
        ("normal_with_calm_meter", packet(orders=three_pms, series=[calm]), "NORMAL", ()),
        ("normal_meter_only", packet(series=[calm]), "NORMAL", ()),
        (
            "not_enough_data_empty",
            packet(),
            "NOT_ENOUGH_DATA",
            ("not_enough_data",),
        ),
        (
            "not_enough_data_two_wos",
            packet(orders=three_pms[:2]),
            "NOT_ENOUGH_DATA",
            ("not_enough_data",),
        ),
        (
            "not_enough_data_short_meter",
            packet(orders=[three_pms[0]], series=[make_gauge(values=(50.0, 51.0))]),
            "NOT_ENOUGH_DATA",
            ("not_enough_data",),
        ),
        (
            "open_emergency",
            packet(orders=three_pms + [open_em]),
            "NEEDS_ATTENTION",
            ("open_emergency_wo",),
        ),
        (
            "in_progress_emergency",
            packet(orders=three_pms + [in_progress_em]),
            "NEEDS_ATTENTION",
            ("open_emergency_wo",),
        ),
        (
            "completed_emergency_is_calm",
            packet(orders=three_pms + [completed_em]),
            "NORMAL",
            (),
        ),
        (
            "delayed_pair",
            packet(orders=three_pms + [late_1, late_2]),
            "NEEDS_ATTENTION",
            ("delayed_workorders",),
        ),
        (
            "single_delay_is_calm",
            packet(orders=three_pms + [late_1]),
            "NORMAL",
            (),
        ),
        (
            "active_critical_alert",
            packet(orders=three_pms, alerts=[critical]),
            "NEEDS_ATTENTION",
            ("active_critical_alert",),
        ),
        (
            "inactive_critical_is_calm",
            packet(orders=three_pms, alerts=[inactive_critical]),
            "NORMAL",
            (),
        ),
        (
            "warning_alert_is_calm",
            packet(orders=three_pms, alerts=[warn]),
            "NORMAL",
            (),
        ),
        (
            "alert_only_sparse_asset",
            packet(alerts=[critical]),
            "NEEDS_ATTENTION",
            ("active_critical_alert",),
        ),
        (
            "meter_anomaly_recent",
            packet(orders=three_pms, series=[spiked]),
            "NEEDS_ATTENTION",
            ("meter_anomaly",),
        ),
        (
            "meter_anomaly_stale",
            packet(orders=three_pms, series=[old_spiked]),
            "NORMAL",
            (),
        ),
        (
            "down_while_running",
            packet(asset=down_asset, orders=three_pms),
            "NEEDS_ATTENTION",
            ("down_while_running_inconsistency",),
        ),
        (
            "emergency_plus_alert",
            packet(orders=three_pms + [open_em], alerts=[critical]),
            "NEEDS_ATTENTION",
            ("open_emergency_wo", "active_critical_alert"),
        ),
        (
            "everything_fires",
            packet(
                asset=down_asset,
                orders=three_pms + [open_em, late_1, late_2],
                series=[spiked],
                alerts=[critical],
            ),
            "NEEDS_ATTENTION",
            (
                "open_emergency_wo",
                "delayed_workorders",
                "active_critical_alert",
                "meter_anomaly",
                "down_while_running_inconsistency",
            ),
        ),
    ]
    return cases


@pytest.fixture
def golden_cases():
    return golden_packets()
