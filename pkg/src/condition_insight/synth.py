"""Seeded synthetic portfolio generation for desk-scale runs.

Each generated asset follows one scenario with a known rule verdict:

- healthy:       enough on-time preventive history, calm meter -> NORMAL
- emergency:     an open emergency work order                  -> NEEDS_ATTENTION
- delayed:       two or more late completions                  -> NEEDS_ATTENTION
- meter_anomaly: a gauge spike inside the rule lookback        -> NEEDS_ATTENTION
- sparse:        one work order, no meters, no alerts          -> NOT_ENOUGH_DATA

The RNG only varies cosmetics (descriptions, ages, jitter); the structure
that drives the rule engine is fixed per scenario, and the one property the
jitter could plausibly break (the spike being the only anomaly) is asserted
at generation time. Same seed, same bytes.
"""

from __future__ import annotations

import csv
import json
import math
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .errors import EmptyInput, InvalidEnum
from .meters import AbstractionConfig, MeterEventKind, abstract_meter
from .model import (
    Alert,
    AlertSeverity,
    Asset,
    AssetStatus,
    ConditionCategory,
    MeterSeries,
    MeterType,
    WorkOrder,
    WorkOrderStatus,
    WorkOrderType,
    format_timestamp,
)

SCENARIOS = ("healthy", "emergency", "delayed", "meter_anomaly", "sparse")

EXPECTED_CATEGORY = {
    "healthy": ConditionCategory.NORMAL,
    "emergency": ConditionCategory.NEEDS_ATTENTION,
    "delayed": ConditionCategory.NEEDS_ATTENTION,
    "meter_anomaly": ConditionCategory.NEEDS_ATTENTION,
    "sparse": ConditionCategory.NOT_ENOUGH_DATA,
}

ANCHOR = datetime(2026, 1, 1, tzinfo=timezone.utc)

_SITES = ("SITE-A", "SITE-B")
_CLASSES = ("PUMP", "MOTOR", "COMPRESSOR")
_MANUFACTURERS = ("Flowserve", "Siemens", "Atlas Copco", "Grundfos", "WEG")

_FMEA_LIBRARY: tuple[tuple[str, str, str, str, str], ...] = (
    ("PUMP", "mechanical seal", "external leakage", "seal face wear",
     "Replace mechanical seal; Verify shaft alignment"),
    ("PUMP", "impeller", "reduced flow", "cavitation erosion",
     "Inspect impeller for pitting; Review suction pressure"),
    ("PUMP", "bearing", "high vibration", "inadequate lubrication",
     "Regrease bearing; Check vibration spectrum"),
    ("MOTOR", "stator winding", "insulation breakdown", "thermal aging",
     "Perform insulation resistance test; Check cooling airflow"),
    ("MOTOR", "bearing", "abnormal noise", "brinelling from standstill vibration",
     "Replace drive-end bearing; Inspect coupling"),
    ("MOTOR", "terminal box", "phase imbalance", "loose connection",
     "Retorque terminal connections; Thermographic survey"),
    ("COMPRESSOR", "discharge valve", "pressure loss", "valve plate fatigue",
     "Replace valve plates; Check discharge temperature"),
    ("COMPRESSOR", "piston ring", "reduced capacity", "ring wear",
     "Replace piston rings; Measure cylinder clearance"),
    ("COMPRESSOR", "intercooler", "overheating", "fouled tubes",
     "Clean intercooler tubes; Verify cooling water flow"),
)

_CORRECTIVE_TEXT = {
    "PUMP": (
        ("seal leaking at drive end, drips collecting under baseplate", "LEAK"),
        ("flow dropped below setpoint, suspected impeller wear", "LOWFLOW"),
        ("vibration alarm on outboard bearing during run-up", "VIB"),
    ),
    "MOTOR": (
        ("motor tripping on winding temperature after 30 minutes", "OVERHEAT"),
        ("grinding noise from drive-end bearing under load", "NOISE"),
        ("current imbalance between phases measured at panel", "ELEC"),
    ),
    "COMPRESSOR": (
        ("discharge pressure falling short of demand on stage 2", "LOWPRESS"),
        ("capacity down, longer loading cycles than baseline", "CAPACITY"),
        ("aftercooler outlet running hot, tubes likely fouled", "OVERHEAT"),
    ),
}

_PREVENTIVE_TEXT = (
    "routine lubrication and visual inspection",
    "scheduled alignment check and bolt retorque",
    "quarterly condition survey per maintenance plan",
    "filter change and general housekeeping",
)


def scenario_counts(n_assets: int, mix: dict[str, float] | None) -> dict[str, int]:
    """Integer scenario allocation by largest remainder; slack goes healthy."""
    if n_assets < 1:
        raise EmptyInput("n_assets must be at least 1")
    mix = dict(mix or {})
    for name in mix:
        if name not in SCENARIOS:
            raise InvalidEnum("scenario", name)
    fractions = {name: float(mix.get(name, 0.0)) for name in SCENARIOS}
    if any(f < 0 for f in fractions.values()):
        raise InvalidEnum("scenario mix", mix)
    total = sum(fractions.values())
    if total > 1.0 + 1e-9:
        raise InvalidEnum("scenario mix sums past 1.0", mix)
    fractions["healthy"] += 1.0 - total

    exact = {name: fractions[name] * n_assets for name in SCENARIOS}
    counts = {name: math.floor(exact[name]) for name in SCENARIOS}
    shortfall = n_assets - sum(counts.values())
    by_remainder = sorted(
        SCENARIOS, key=lambda name: (-(exact[name] - counts[name]), SCENARIOS.index(name))
    )
    for name in by_remainder[:shortfall]:
        counts[name] += 1
    return counts


def _day(offset: int) -> datetime:
    return ANCHOR + timedelta(days=offset)


def _preventive(wonum: str, asset: str, reported_offset: int, rng: random.Random) -> WorkOrder:
    reported = _day(reported_offset)
    target = reported + timedelta(days=14)
    return WorkOrder(
        wonum=wonum,
        asset_number=asset,
        wo_type=WorkOrderType.PREVENTIVE,
        status=WorkOrderStatus.COMPLETED,
        reported_date=reported,
        target_date=target,
        completion_date=target,  # on time: never counts as delayed
        description=rng.choice(_PREVENTIVE_TEXT),
        problem_code=None,
    )


def _corrective(
    wonum: str,
    asset: str,
    asset_class: str,
    reported_offset: int,
    rng: random.Random,
    *,
    days_late: int = 0,
) -> WorkOrder:
    description, code = rng.choice(_CORRECTIVE_TEXT[asset_class])
    reported = _day(reported_offset)
    target = reported + timedelta(days=7)
    return WorkOrder(
        wonum=wonum,
        asset_number=asset,
        wo_type=WorkOrderType.CORRECTIVE,
        status=WorkOrderStatus.COMPLETED,
        reported_date=reported,
        target_date=target,
        completion_date=target + timedelta(days=days_late),
        description=description,
        problem_code=code,
    )


def _calm_gauge(asset: str, rng: random.Random) -> MeterSeries:
    # Slow low-amplitude wave: successive deltas and deviations both stay
    # inside half the detection bands, jitter included, so no event fires.
    readings = tuple(
        (
            _day(-30 + i * 3),
            round(50.0 + 0.3 * math.sin(2 * math.pi * i / 10) + rng.uniform(-0.02, 0.02), 3),
        )
        for i in range(10)
    )
    return MeterSeries(asset, "bearing_temp", MeterType.GAUGE, "degC", readings)


def _spiked_gauge(asset: str, rng: random.Random) -> MeterSeries:
    readings = [
        (
            _day(-25 + i * 3),
            round(50.0 + 0.3 * math.sin(2 * math.pi * i / 10) + rng.uniform(-0.02, 0.02), 3),
        )
        for i in range(8)
    ]
    readings.append((_day(-1), 80.0))
    return MeterSeries(asset, "bearing_temp", MeterType.GAUGE, "degC", tuple(readings))


def _runtime_meter(asset: str) -> MeterSeries:
    readings = tuple((_day(-40 + i * 5), 1000.0 + 120.0 * i) for i in range(9))
    return MeterSeries(asset, "run_hours", MeterType.CONTINUOUS, "h", readings)


def _check_meter(series: MeterSeries, expect_anomaly: bool) -> None:
    facts = abstract_meter(series, AbstractionConfig())
    fired = {event.kind for event in facts.events}
    if expect_anomaly and MeterEventKind.Z_SCORE_ANOMALY not in fired:
        raise AssertionError(f"{series.meter_name} on {series.asset_number}: spike did not register")
    if not expect_anomaly and fired:
        raise AssertionError(f"{series.meter_name} on {series.asset_number}: unexpected events {fired}")


def _build_asset(index: int, scenario: str, rng: random.Random) -> dict[str, object]:
    asset_number = f"AST-{index:04d}"
    site = _SITES[index % len(_SITES)]
    asset_class = _CLASSES[index % len(_CLASSES)]
    asset = Asset(
        asset_number=asset_number,
        description=f"{asset_class.lower()} unit {index:04d}",
        site_id=site,
        priority=rng.randint(2, 4),
        status=AssetStatus.OPERATING,
        is_running=True,
        failure_code=None,
        asset_age_in_years=round(rng.uniform(1.0, 25.0), 1),
        manufacturer=rng.choice(_MANUFACTURERS),
        asset_class=asset_class,
    )

    orders: list[WorkOrder] = []
    meters: list[MeterSeries] = []
    alerts: list[Alert] = []
    wo_seq = 0

    def next_wonum() -> str:
        nonlocal wo_seq
        wo_seq += 1
        return f"WO-{index:04d}-{wo_seq}"

    if scenario == "healthy":
        for offset in (-150, -100, -50):
            orders.append(_preventive(next_wonum(), asset_number, offset, rng))
        calm = _calm_gauge(asset_number, rng)
        _check_meter(calm, expect_anomaly=False)
        meters.append(calm)
        runtime = _runtime_meter(asset_number)
        _check_meter(runtime, expect_anomaly=False)
        meters.append(runtime)
    elif scenario == "emergency":
        for offset in (-140, -90, -40):
            orders.append(_preventive(next_wonum(), asset_number, offset, rng))
        description, code = rng.choice(_CORRECTIVE_TEXT[asset_class])
        reported = _day(-10)
        orders.append(
            WorkOrder(
                wonum=next_wonum(),
                asset_number=asset_number,
                wo_type=WorkOrderType.EMERGENCY,
                status=WorkOrderStatus.OPEN,
                reported_date=reported,
                target_date=reported + timedelta(days=40),  # future: not delayed
                completion_date=None,
                description=f"unit down, {description}",
                problem_code=code,
            )
        )
        alerts.append(
            Alert(
                alert_id=f"AL-{index:04d}-1",
                asset_number=asset_number,
                severity=AlertSeverity.WARNING,
                raised_at=_day(-10),
                active=False,
                message="operator reported abnormal running behaviour",
            )
        )
    elif scenario == "delayed":
        orders.append(_preventive(next_wonum(), asset_number, -160, rng))
        orders.append(_preventive(next_wonum(), asset_number, -110, rng))
        orders.append(_corrective(next_wonum(), asset_number, asset_class, -80, rng, days_late=5))
        orders.append(_corrective(next_wonum(), asset_number, asset_class, -45, rng, days_late=9))
    elif scenario == "meter_anomaly":
        for offset in (-130, -85, -35):
            orders.append(_preventive(next_wonum(), asset_number, offset, rng))
        spiked = _spiked_gauge(asset_number, rng)
        _check_meter(spiked, expect_anomaly=True)
        meters.append(spiked)
        runtime = _runtime_meter(asset_number)
        _check_meter(runtime, expect_anomaly=False)
        meters.append(runtime)
    elif scenario == "sparse":
        orders.append(_preventive(next_wonum(), asset_number, -120, rng))
    else:
        raise InvalidEnum("scenario", scenario)

    return {
        "asset": asset,
        "orders": orders,
        "meters": meters,
        "alerts": alerts,
        "scenario": scenario,
    }


def _write_csv(path: Path, header: list[str], rows: list[list[object]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_jsonl(path: Path, documents: list[dict[str, object]]) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for document in documents:
            handle.write(json.dumps(document, ensure_ascii=False) + "\n")


def generate_synthetic_portfolio(
    seed: int,
    n_assets: int,
    mix: dict[str, float] | None = None,
    out_dir: str | Path = "synth",
) -> dict[str, object]:
    """Write ingestion files for a portfolio with known rule verdicts.

    Returns the manifest (also written as manifest.json) mapping every asset
    to its scenario and expected category.
    """
    counts = scenario_counts(n_assets, mix)
    rng = random.Random(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    built: list[dict[str, object]] = []
    index = 0
    for scenario in SCENARIOS:
        for _ in range(counts[scenario]):
            index += 1
            built.append(_build_asset(index, scenario, rng))

    asset_rows = []
    wo_rows = []
    meter_docs = []
    alert_docs = []
    for item in built:
        asset: Asset = item["asset"]  # type: ignore[assignment]
        asset_rows.append([
            asset.asset_number, asset.description, asset.site_id, asset.priority,
            asset.status.value, asset.is_running, asset.failure_code or "",
            asset.asset_age_in_years, asset.manufacturer or "", asset.asset_class or "",
        ])
        for order in item["orders"]:  # type: ignore[union-attr]
            wo_rows.append([
                order.wonum, order.asset_number, order.wo_type.value, order.status.value,
                format_timestamp(order.reported_date),
                format_timestamp(order.target_date) if order.target_date else "",
                format_timestamp(order.completion_date) if order.completion_date else "",
                order.problem_code or "", order.description,
            ])
        for series in item["meters"]:  # type: ignore[union-attr]
            meter_docs.append({
                "asset_number": series.asset_number,
                "meter_name": series.meter_name,
                "meter_type": series.meter_type.value,
                "unit": series.unit,
                "readings": [[format_timestamp(ts), value] for ts, value in series.readings],
            })
        for alert in item["alerts"]:  # type: ignore[union-attr]
            alert_docs.append({
                "alert_id": alert.alert_id,
                "asset_number": alert.asset_number,
                "severity": alert.severity.value,
                "raised_at": format_timestamp(alert.raised_at),
                "active": alert.active,
                "message": alert.message,
            })

    _write_csv(
        out / "assets.csv",
        ["asset_number", "description", "site_id", "priority", "status", "is_running",
         "failure_code", "asset_age_in_years", "manufacturer", "asset_class"],
        asset_rows,
    )
    _write_csv(
        out / "workorders.csv",
        ["wonum", "asset_number", "wo_type", "status", "reported_date", "target_date",
         "completion_date", "problem_code", "description"],
        wo_rows,
    )
    _write_csv(
        out / "fmea.csv",
        ["asset_class", "component", "failure_mode", "mechanism", "recommended_actions"],
        [list(row) for row in _FMEA_LIBRARY],
    )
    _write_jsonl(out / "meters.jsonl", meter_docs)
    _write_jsonl(out / "alerts.jsonl", alert_docs)

    manifest: dict[str, object] = {
        "anchor": format_timestamp(ANCHOR),
        "assets": [
            {
                "asset_number": item["asset"].asset_number,  # type: ignore[union-attr]
                "expected_category": EXPECTED_CATEGORY[item["scenario"]].value,  # type: ignore[index]
                "scenario": item["scenario"],
                "site_id": item["asset"].site_id,  # type: ignore[union-attr]
                "asset_class": item["asset"].asset_class,  # type: ignore[union-attr]
            }
            for item in built
        ],
        "files": ["assets.csv", "workorders.csv", "meters.jsonl", "alerts.jsonl", "fmea.csv"],
        "mix": {name: counts[name] for name in SCENARIOS if counts[name]},
        "n_assets": n_assets,
        "seed": seed,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
