"""Deterministic behavioral abstraction of meter time series.

GAUGE meters get mean/sample-std summaries with Z-score and abrupt-change
events; CONTINUOUS (accumulating) meters get increment statistics with a
normal band plus reset, rate-anomaly, and flat-period events. Everything
here is a pure function: identical (series, config) inputs yield identical
output, and no raw readings survive into the produced facts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from .errors import NotEnoughData
from .model import MeterSeries, MeterType


@dataclass(frozen=True)
class AbstractionConfig:
    """Thresholds for behavioral abstraction.

    baseline_window limits gauge statistics to the trailing window of that
    many readings (None = full history). eps_flat is the flat-increment
    threshold for continuous meters; flat_run_min is how many consecutive
    flat increments make an "extended" flat period.
    """

    z_thresh: float = 2.0
    k: float = 2.0
    eps_flat: float = 0.0
    min_points: int = 5
    baseline_window: int | None = None
    flat_run_min: int = 3
    exclude_resets_from_band: bool = False

    def __post_init__(self) -> None:
        if self.z_thresh <= 0 or self.k <= 0:
            raise ValueError("z_thresh and k must be positive")
        if self.eps_flat < 0:
            raise ValueError("eps_flat must be non-negative")
        if self.min_points < 2:
            raise ValueError("min_points must be at least 2")
        if self.baseline_window is not None and self.baseline_window < 2:
            raise ValueError("baseline_window must be at least 2")
        if self.flat_run_min < 1:
            raise ValueError("flat_run_min must be at least 1")


class MeterEventKind(str, Enum):
    Z_SCORE_ANOMALY = "Z_SCORE_ANOMALY"
    ABRUPT_CHANGE = "ABRUPT_CHANGE"
    RESET = "RESET"
    RATE_ANOMALY = "RATE_ANOMALY"
    FLAT_PERIOD = "FLAT_PERIOD"


_GAUGE_KINDS = frozenset({MeterEventKind.Z_SCORE_ANOMALY, MeterEventKind.ABRUPT_CHANGE})


@dataclass(frozen=True)
class MeterEvent:
    """A detected behavioral event.

    index is the 1-based reading position i (increments attach to their
    right endpoint, so a reset between readings 3 and 4 has index 4).
    magnitude carries whatever triggered the event: the z-score, the
    increment, or the flat-run length.
    """

    kind: MeterEventKind
    index: int
    timestamp: datetime
    value: float
    magnitude: float


@dataclass(frozen=True)
class GaugeSummary:
    mean: float
    std: float
    min: float
    max: float
    latest: tuple[datetime, float]
    n: int


@dataclass(frozen=True)
class ContinuousSummary:
    increment_mean: float
    increment_std: float
    normal_band: tuple[float, float]
    total_delta: float
    n_increments: int


@dataclass(frozen=True)
class MeterFacts:
    asset_number: str
    meter_name: str
    meter_type: MeterType
    unit: str
    n: int
    summary: GaugeSummary | ContinuousSummary | None
    events: tuple[MeterEvent, ...]
    insufficient_data: bool = False


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _sample_std(values: list[float], mean: float) -> float:
    # Sample (N-1) standard deviation; 0 by definition when all values equal.
    if len(values) < 2:
        return 0.0
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))


def _gauge_window(series: MeterSeries, cfg: AbstractionConfig) -> tuple[list[tuple[datetime, float]], int]:
    """Trailing baseline slice and the 1-based index of its first reading."""
    readings = list(series.readings)
    if cfg.baseline_window is not None and len(readings) > cfg.baseline_window:
        offset = len(readings) - cfg.baseline_window
        return readings[offset:], offset + 1
    return readings, 1


def _check_gauge(series: MeterSeries, cfg: AbstractionConfig) -> None:
    if series.meter_type is not MeterType.GAUGE:
        raise ValueError(f"{series.meter_name}: expected GAUGE series")
    if series.n < cfg.min_points:
        raise NotEnoughData(series.n, cfg.min_points)


def _check_continuous(series: MeterSeries, cfg: AbstractionConfig) -> None:
    if series.meter_type is not MeterType.CONTINUOUS:
        raise ValueError(f"{series.meter_name}: expected CONTINUOUS series")
    if series.n < cfg.min_points:
        raise NotEnoughData(series.n, cfg.min_points)


def summarize_gauge(series: MeterSeries, cfg: AbstractionConfig) -> GaugeSummary:
    """Mean, sample standard deviation, extrema and latest reading."""
    _check_gauge(series, cfg)
    window, _ = _gauge_window(series, cfg)
    values = [v for _, v in window]
    mean = _mean(values)
    return GaugeSummary(
        mean=mean,
        std=_sample_std(values, mean),
        min=min(values),
        max=max(values),
        latest=window[-1],
        n=len(values),
    )


def detect_gauge_anomalies(series: MeterSeries, cfg: AbstractionConfig) -> tuple[MeterEvent, ...]:
    """Z-score deviations and abrupt changes over the baseline window.

    Both checks use strict inequality and are suppressed entirely when the
    sample std is zero. An abrupt change must also deviate from the mean by
    more than one std, so minor oscillations around the baseline are not
    reported.
    """
    _check_gauge(series, cfg)
    window, start = _gauge_window(series, cfg)
    values = [v for _, v in window]
    mean = _mean(values)
    std = _sample_std(values, mean)
    events: list[MeterEvent] = []
    if std == 0.0:
        return ()
    for pos, (ts, value) in enumerate(window):
        index = start + pos
        z = (value - mean) / std
        if abs(z) > cfg.z_thresh:
            events.append(MeterEvent(MeterEventKind.Z_SCORE_ANOMALY, index, ts, value, z))
        if pos >= 1:
            delta = value - values[pos - 1]
            if abs(delta) > cfg.k * std and abs(value - mean) > std:
                events.append(MeterEvent(MeterEventKind.ABRUPT_CHANGE, index, ts, value, delta))
    events.sort(key=lambda e: (e.index, e.kind.value))
    return tuple(events)


def _increments(series: MeterSeries) -> list[float]:
    values = series.values
    return [values[i] - values[i - 1] for i in range(1, len(values))]


def summarize_continuous(series: MeterSeries, cfg: AbstractionConfig) -> ContinuousSummary:
    """Increment statistics and the k-sigma normal band.

    Reset (negative) increments are included in the statistics unless
    cfg.exclude_resets_from_band is set.
    """
    _check_continuous(series, cfg)
    increments = _increments(series)
    band_increments = (
        [d for d in increments if d >= 0] if cfg.exclude_resets_from_band else increments
    )
    if not band_increments:
        raise NotEnoughData(0, 1)
    inc_mean = _mean(band_increments)
    inc_std = _sample_std(band_increments, inc_mean)
    values = series.values
    return ContinuousSummary(
        increment_mean=inc_mean,
        increment_std=inc_std,
        normal_band=(inc_mean - cfg.k * inc_std, inc_mean + cfg.k * inc_std),
        total_delta=values[-1] - values[0],
        n_increments=len(increments),
    )


def detect_continuous_events(series: MeterSeries, cfg: AbstractionConfig) -> tuple[MeterEvent, ...]:
    """Resets, rate anomalies outside the normal band, and flat periods.

    A negative increment is reported only as RESET, never doubled as a rate
    anomaly. A maximal run of >= flat_run_min increments with |delta| <=
    eps_flat is reported once at its first increment with the run length as
    magnitude.
    """
    _check_continuous(series, cfg)
    summary = summarize_continuous(series, cfg)
    lo, hi = summary.normal_band
    increments = _increments(series)
    readings = series.readings
    events: list[MeterEvent] = []
    for pos, delta in enumerate(increments):
        index = pos + 2  # 1-based reading index of the increment's right endpoint
        ts, value = readings[index - 1]
        if delta < 0:
            events.append(MeterEvent(MeterEventKind.RESET, index, ts, value, delta))
        elif not lo <= delta <= hi:
            events.append(MeterEvent(MeterEventKind.RATE_ANOMALY, index, ts, value, delta))
    run_start: int | None = None
    run_length = 0
    for pos, delta in enumerate(increments + [math.inf]):
        if abs(delta) <= cfg.eps_flat:
            if run_start is None:
                run_start = pos
            run_length += 1
            continue
        if run_start is not None and run_length >= cfg.flat_run_min:
            index = run_start + 2
            ts, value = readings[index - 1]
            events.append(MeterEvent(MeterEventKind.FLAT_PERIOD, index, ts, value, float(run_length)))
        run_start = None
        run_length = 0
    events.sort(key=lambda e: (e.index, e.kind.value))
    return tuple(events)


def abstract_meter(series: MeterSeries, cfg: AbstractionConfig) -> MeterFacts:
    """Dispatch on meter type; encode insufficiency instead of raising."""
    try:
        if series.meter_type is MeterType.GAUGE:
            summary: GaugeSummary | ContinuousSummary = summarize_gauge(series, cfg)
            events = detect_gauge_anomalies(series, cfg)
        else:
            summary = summarize_continuous(series, cfg)
            events = detect_continuous_events(series, cfg)
    except NotEnoughData:
        return MeterFacts(
            asset_number=series.asset_number,
            meter_name=series.meter_name,
            meter_type=series.meter_type,
            unit=series.unit,
            n=series.n,
            summary=None,
            events=(),
            insufficient_data=True,
        )
    return MeterFacts(
        asset_number=series.asset_number,
        meter_name=series.meter_name,
        meter_type=series.meter_type,
        unit=series.unit,
        n=series.n,
        summary=summary,
        events=events,
        insufficient_data=False,
    )
