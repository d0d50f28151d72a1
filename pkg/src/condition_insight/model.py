"""Core domain vocabulary: assets, work orders, meters, alerts, FMEA entries.

All types are immutable after validation and safe to share between
concurrent pipeline workers. Timestamps are stored at second resolution,
always UTC.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Mapping, Sequence

from .errors import (
    DuplicateTimestamp,
    EmptySeriesWarning,
    InconsistentDates,
    InvalidEnum,
    MissingField,
    NonNumericValue,
)


class AssetStatus(str, Enum):
    OPERATING = "OPERATING"
    DOWN = "DOWN"
    DECOMMISSIONED = "DECOMMISSIONED"


class WorkOrderType(str, Enum):
    PREVENTIVE = "PREVENTIVE"
    CORRECTIVE = "CORRECTIVE"
    EMERGENCY = "EMERGENCY"
    OTHER = "OTHER"


class WorkOrderStatus(str, Enum):
    OPEN = "OPEN"
    IN_PROGRESS = "IN_PROGRESS"
    COMPLETED = "COMPLETED"
    CANCELLED = "CANCELLED"


class MeterType(str, Enum):
    GAUGE = "GAUGE"
    CONTINUOUS = "CONTINUOUS"


class AlertSeverity(str, Enum):
    INFO = "INFO"
    WARNING = "WARNING"
    CRITICAL = "CRITICAL"


class ConditionCategory(str, Enum):
    NORMAL = "NORMAL"
    NEEDS_ATTENTION = "NEEDS_ATTENTION"
    NOT_ENOUGH_DATA = "NOT_ENOUGH_DATA"


# Work-order type codes vary across CMMS deployments; this fixed table is the
# deterministic normalization applied at validation. Extensible via the
# `type_codes` argument of validate_work_order.
DEFAULT_WO_TYPE_CODES: Mapping[str, WorkOrderType] = {
    "PM": WorkOrderType.PREVENTIVE,
    "CM": WorkOrderType.CORRECTIVE,
    "EM": WorkOrderType.EMERGENCY,
    "PREVENTIVE": WorkOrderType.PREVENTIVE,
    "CORRECTIVE": WorkOrderType.CORRECTIVE,
    "EMERGENCY": WorkOrderType.EMERGENCY,
    "OTHER": WorkOrderType.OTHER,
}


def parse_timestamp(value: object) -> datetime:
    """Parse an RFC 3339 timestamp, normalized to second-resolution UTC."""
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError as exc:
            raise InvalidEnum("timestamp", value) from exc
    else:
        raise InvalidEnum("timestamp", value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    """Render a UTC timestamp as RFC 3339 with trailing Z."""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Asset:
    asset_number: str
    description: str = ""
    site_id: str = ""
    priority: int = 3
    status: AssetStatus = AssetStatus.OPERATING
    is_running: bool = True
    failure_code: str | None = None
    asset_age_in_years: float = 0.0
    manufacturer: str | None = None
    # Not part of the evidence-packet projection; used only to select the
    # FMEA rows applicable to this asset. None means "match all classes".
    asset_class: str | None = None

    def __post_init__(self) -> None:
        if not self.asset_number:
            raise MissingField("asset_number")
        if self.asset_age_in_years < 0:
            raise InvalidEnum("asset_age_in_years", self.asset_age_in_years)
        if not 1 <= self.priority <= 5:
            raise InvalidEnum("priority", self.priority)


@dataclass(frozen=True)
class WorkOrder:
    wonum: str
    asset_number: str
    wo_type: WorkOrderType
    status: WorkOrderStatus
    reported_date: datetime
    target_date: datetime | None = None
    completion_date: datetime | None = None
    description: str = ""
    problem_code: str | None = None

    def __post_init__(self) -> None:
        if not self.wonum:
            raise MissingField("wonum")
        if self.completion_date is not None and self.completion_date < self.reported_date:
            raise InconsistentDates(
                f"{self.wonum}: completion {self.completion_date} before report {self.reported_date}"
            )
        completed = self.status is WorkOrderStatus.COMPLETED
        if completed and self.completion_date is None:
            raise InconsistentDates(f"{self.wonum}: status COMPLETED without completion_date")
        if not completed and self.completion_date is not None:
            raise InconsistentDates(f"{self.wonum}: completion_date set but status is {self.status.value}")


@dataclass(frozen=True)
class MeterSeries:
    asset_number: str
    meter_name: str
    meter_type: MeterType
    unit: str
    readings: tuple[tuple[datetime, float], ...]

    def __post_init__(self) -> None:
        for (t_prev, _), (t_next, _) in zip(self.readings, self.readings[1:]):
            if t_next <= t_prev:
                raise DuplicateTimestamp(t_next)

    @property
    def n(self) -> int:
        return len(self.readings)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.readings)


@dataclass(frozen=True)
class FmeaEntry:
    asset_class: str
    component: str
    failure_mode: str
    mechanism: str
    recommended_actions: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.component:
            raise MissingField("component")
        if not self.mechanism:
            raise MissingField("mechanism")


@dataclass(frozen=True)
class Alert:
    alert_id: str
    asset_number: str
    severity: AlertSeverity
    raised_at: datetime
    active: bool
    message: str = ""

    def __post_init__(self) -> None:
        if not self.alert_id:
            raise MissingField("alert_id")


@dataclass(frozen=True)
class HealthScore:
    score_name: str
    value: float
    range: tuple[float, float]
    meaning: str = ""

    def __post_init__(self) -> None:
        lo, hi = self.range
        if not lo <= self.value <= hi:
            raise InvalidEnum("value", self.value)


def _require(record: Mapping[str, object], fields: Sequence[str]) -> None:
    for name in fields:
        if record.get(name) in (None, ""):
            raise MissingField(name)


def _parse_enum(cls: type, field_name: str, value: object):  # noqa: ANN202
    try:
        return cls(str(value).strip().upper())
    except ValueError:
        raise InvalidEnum(field_name, value) from None


def validate_asset(record: Mapping[str, object]) -> Asset:
    """Build a validated Asset from a raw key-value record."""
    _require(record, ("asset_number",))
    raw_status = record.get("status", AssetStatus.OPERATING.value)
    raw_running = record.get("is_running", True)
    if isinstance(raw_running, str):
        raw_running = raw_running.strip().lower() in ("true", "1", "yes", "y")
    try:
        priority = int(record.get("priority", 3) or 3)
        age = float(record.get("asset_age_in_years", 0.0) or 0.0)
    except (TypeError, ValueError) as exc:
        raise InvalidEnum("priority/asset_age_in_years", record) from exc
    return Asset(
        asset_number=str(record["asset_number"]),
        description=str(record.get("description", "") or ""),
        site_id=str(record.get("site_id", "") or ""),
        priority=priority,
        status=_parse_enum(AssetStatus, "status", raw_status),
        is_running=bool(raw_running),
        failure_code=str(record["failure_code"]) if record.get("failure_code") else None,
        asset_age_in_years=age,
        manufacturer=str(record["manufacturer"]) if record.get("manufacturer") else None,
        asset_class=str(record["asset_class"]) if record.get("asset_class") else None,
    )


def validate_work_order(
    record: Mapping[str, object],
    type_codes: Mapping[str, WorkOrderType] = DEFAULT_WO_TYPE_CODES,
) -> WorkOrder:
    """Build a validated WorkOrder from a raw key-value record.

    Unrecognized wo_type codes normalize to OTHER; dates are normalized to
    UTC. Raises MissingField, InvalidEnum or InconsistentDates on bad input.
    """
    _require(record, ("wonum", "asset_number", "wo_type", "status", "reported_date"))
    raw_type = str(record["wo_type"]).strip().upper()
    wo_type = type_codes.get(raw_type, WorkOrderType.OTHER)
    status = _parse_enum(WorkOrderStatus, "status", record["status"])
    target = record.get("target_date")
    completion = record.get("completion_date")
    return WorkOrder(
        wonum=str(record["wonum"]),
        asset_number=str(record["asset_number"]),
        wo_type=wo_type,
        status=status,
        reported_date=parse_timestamp(record["reported_date"]),
        target_date=parse_timestamp(target) if target not in (None, "") else None,
        completion_date=parse_timestamp(completion) if completion not in (None, "") else None,
        description=str(record.get("description", "") or ""),
        problem_code=str(record["problem_code"]) if record.get("problem_code") else None,
    )


def validate_meter_series(record: Mapping[str, object]) -> MeterSeries:
    """Build a validated MeterSeries from a raw record.

    Readings are sorted ascending by timestamp; exact duplicate timestamps
    are rejected. An empty series is accepted but flagged with
    EmptySeriesWarning so downstream rules can count the insufficiency.
    """
    _require(record, ("asset_number", "meter_name", "meter_type"))
    meter_type = _parse_enum(MeterType, "meter_type", record["meter_type"])
    raw_readings = record.get("readings") or ()
    parsed: list[tuple[datetime, float]] = []
    for item in raw_readings:
        ts_raw, value_raw = item[0], item[1]
        if isinstance(value_raw, bool) or not isinstance(value_raw, (int, float)):
            try:
                value = float(value_raw)  # type: ignore[arg-type]
            except (TypeError, ValueError):
                raise NonNumericValue(value_raw) from None
        else:
            value = float(value_raw)
        if value != value or value in (float("inf"), float("-inf")):
            raise NonNumericValue(value_raw)
        parsed.append((parse_timestamp(ts_raw), value))
    parsed.sort(key=lambda pair: pair[0])
    for (t_prev, _), (t_next, _) in zip(parsed, parsed[1:]):
        if t_next == t_prev:
            raise DuplicateTimestamp(t_next)
    if not parsed:
        warnings.warn(
            f"meter {record['meter_name']} on {record['asset_number']} has no readings",
            EmptySeriesWarning,
            stacklevel=2,
        )
    return MeterSeries(
        asset_number=str(record["asset_number"]),
        meter_name=str(record["meter_name"]),
        meter_type=meter_type,
        unit=str(record.get("unit", "") or ""),
        readings=tuple(parsed),
    )


def validate_fmea_entry(record: Mapping[str, object]) -> FmeaEntry:
    _require(record, ("asset_class", "component", "mechanism"))
    actions = record.get("recommended_actions") or ()
    if isinstance(actions, str):
        actions = tuple(part.strip() for part in actions.split(";") if part.strip())
    return FmeaEntry(
        asset_class=str(record["asset_class"]),
        component=str(record["component"]),
        failure_mode=str(record.get("failure_mode", "") or ""),
        mechanism=str(record["mechanism"]),
        recommended_actions=tuple(actions),
    )


def validate_alert(record: Mapping[str, object]) -> Alert:
    _require(record, ("alert_id", "asset_number", "severity", "raised_at"))
    active = record.get("active", True)
    if isinstance(active, str):
        active = active.strip().lower() in ("true", "1", "yes", "y")
    return Alert(
        alert_id=str(record["alert_id"]),
        asset_number=str(record["asset_number"]),
        severity=_parse_enum(AlertSeverity, "severity", record["severity"]),
        raised_at=parse_timestamp(record["raised_at"]),
        active=bool(active),
        message=str(record.get("message", "") or ""),
    )


def work_order_record(wo: WorkOrder) -> dict[str, object]:
    """Raw-record form of a WorkOrder; validate_work_order round-trips it."""
    return {
        "wonum": wo.wonum,
        "asset_number": wo.asset_number,
        "wo_type": wo.wo_type.value,
        "status": wo.status.value,
        "reported_date": format_timestamp(wo.reported_date),
        "target_date": format_timestamp(wo.target_date) if wo.target_date else None,
        "completion_date": format_timestamp(wo.completion_date) if wo.completion_date else None,
        "description": wo.description,
        "problem_code": wo.problem_code,
    }


def meter_series_record(series: MeterSeries) -> dict[str, object]:
    """Raw-record form of a MeterSeries; validate_meter_series round-trips it."""
    return {
        "asset_number": series.asset_number,
        "meter_name": series.meter_name,
        "meter_type": series.meter_type.value,
        "unit": series.unit,
        "readings": [[format_timestamp(t), v] for t, v in series.readings],
    }


def asset_record(asset: Asset) -> dict[str, object]:
    """Raw-record form of an Asset; validate_asset round-trips it."""
    return {
        "asset_number": asset.asset_number,
        "description": asset.description,
        "site_id": asset.site_id,
        "priority": asset.priority,
        "status": asset.status.value,
        "is_running": asset.is_running,
        "failure_code": asset.failure_code,
        "asset_age_in_years": asset.asset_age_in_years,
        "manufacturer": asset.manufacturer,
        "asset_class": asset.asset_class,
    }


def fmea_record(entry: FmeaEntry) -> dict[str, object]:
    """Raw-record form of an FmeaEntry; validate_fmea_entry round-trips it."""
    return {
        "asset_class": entry.asset_class,
        "component": entry.component,
        "failure_mode": entry.failure_mode,
        "mechanism": entry.mechanism,
        "recommended_actions": "; ".join(entry.recommended_actions),
    }


def alert_record(alert: Alert) -> dict[str, object]:
    """Raw-record form of an Alert; validate_alert round-trips it."""
    return {
        "alert_id": alert.alert_id,
        "asset_number": alert.asset_number,
        "severity": alert.severity.value,
        "raised_at": format_timestamp(alert.raised_at),
        "active": alert.active,
        "message": alert.message,
    }
