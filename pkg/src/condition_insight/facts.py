"""Evidence packet assembly and its canonical text form.

The serialized document is the contract: it is embedded verbatim into
prompts and persisted to the store, so formatting is pinned down hard.
Layout rules: the root object holds the asset_facts block first, then
metadata keys; inside asset_facts the six blocks keep their fixed order;
every deeper object sorts keys lexicographically. Reals render with at
most six significant digits, timestamps as RFC 3339 UTC.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime

from .errors import AssetMismatch, SchemaViolation
from .meters import (
    ContinuousSummary,
    GaugeSummary,
    MeterEvent,
    MeterEventKind,
    MeterFacts,
)
from .model import (
    Alert,
    AlertSeverity,
    Asset,
    AssetStatus,
    FmeaEntry,
    HealthScore,
    MeterType,
    WorkOrderStatus,
    WorkOrderType,
    format_timestamp,
    parse_timestamp,
)
from .workorders import WorkOrderDigest, WorkorderFacts
from .alignment import FmeaMatch

SCHEMA_VERSION = "1"

FACTS_BLOCK_KEYS = (
    "asset_details_facts",
    "workorder_facts",
    "meter_facts",
    "alert_facts",
    "fmea_facts",
    "health_scores",
)
ROOT_KEYS = ("asset_facts", "evidence_window_days", "generated_at", "schema_version")


@dataclass(frozen=True)
class AssetDetails:
    """The packet's projection of an asset; asset_class never leaves the model."""

    asset_number: str
    description: str
    site_id: str
    priority: int
    status: AssetStatus
    is_running: bool
    failure_code: str | None
    asset_age_in_years: float
    manufacturer: str | None


@dataclass(frozen=True)
class FmeaFactsGroup:
    component: str
    mechanism: str
    actions: tuple[str, ...]
    mass: float
    supporting_wonums: tuple[str, ...]


@dataclass(frozen=True)
class AssetFacts:
    asset_details_facts: AssetDetails
    workorder_facts: WorkorderFacts
    meter_facts: tuple[MeterFacts, ...]
    alert_facts: tuple[Alert, ...]
    fmea_facts: tuple[FmeaFactsGroup, ...]
    health_scores: dict[str, HealthScore]
    generated_at: datetime
    evidence_window_days: int
    schema_version: str = SCHEMA_VERSION


def _project_asset(asset: Asset) -> AssetDetails:
    return AssetDetails(
        asset_number=asset.asset_number,
        description=asset.description,
        site_id=asset.site_id,
        priority=asset.priority,
        status=asset.status,
        is_running=asset.is_running,
        failure_code=asset.failure_code,
        asset_age_in_years=asset.asset_age_in_years,
        manufacturer=asset.manufacturer,
    )


def group_fmea_matches(
    matches: list[FmeaMatch] | tuple[FmeaMatch, ...],
    entries: list[FmeaEntry] | tuple[FmeaEntry, ...] = (),
) -> tuple[FmeaFactsGroup, ...]:
    """Collapse per-work-order matches into (component, mechanism) hypotheses.

    Masses add up across member matches, actions come from every library row
    sharing the pair, and groups order by total mass descending with a
    lexicographic tie-break, so the result is independent of input order.
    """
    actions_by_pair: dict[tuple[str, str], set[str]] = {}
    for entry in entries:
        pair = (entry.component, entry.mechanism)
        actions_by_pair.setdefault(pair, set()).update(entry.recommended_actions)
    members: dict[tuple[str, str], list[FmeaMatch]] = {}
    for match in matches:
        members.setdefault((match.component, match.mechanism), []).append(match)
    groups = []
    for pair, group in members.items():
        group.sort(key=lambda g: (g.wonum, g.rank))
        groups.append(
            FmeaFactsGroup(
                component=pair[0],
                mechanism=pair[1],
                actions=tuple(sorted(actions_by_pair.get(pair, ()))),
                mass=float(sum(g.mass for g in group)),
                supporting_wonums=tuple(sorted({g.wonum for g in group})),
            )
        )
    groups.sort(key=lambda g: (-g.mass, g.component, g.mechanism))
    return tuple(groups)


def build_asset_facts(
    asset: Asset,
    wo: WorkorderFacts,
    meters: list[MeterFacts] | tuple[MeterFacts, ...],
    alerts: list[Alert] | tuple[Alert, ...],
    fmea: list[FmeaMatch] | tuple[FmeaMatch, ...],
    scores: dict[str, HealthScore],
    window_days: int,
    now: datetime,
    *,
    fmea_entries: list[FmeaEntry] | tuple[FmeaEntry, ...] = (),
) -> AssetFacts:
    """Compose the packet for one asset.

    fmea_entries is the library slice the matches came from; it only supplies
    the recommended actions for each matched (component, mechanism) pair.
    """
    for facts in meters:
        if facts.asset_number != asset.asset_number:
            raise AssetMismatch(
                f"meter {facts.meter_name} belongs to {facts.asset_number},"
                f" not {asset.asset_number}"
            )
    for alert in alerts:
        if alert.asset_number != asset.asset_number:
            raise AssetMismatch(
                f"alert {alert.alert_id} belongs to {alert.asset_number},"
                f" not {asset.asset_number}"
            )
    return AssetFacts(
        asset_details_facts=_project_asset(asset),
        workorder_facts=wo,
        meter_facts=tuple(sorted(meters, key=lambda f: f.meter_name)),
        alert_facts=tuple(
            sorted(alerts, key=lambda a: (a.raised_at, a.alert_id), reverse=True)
        ),
        fmea_facts=group_fmea_matches(fmea, fmea_entries),
        health_scores=dict(sorted(scores.items())),
        generated_at=now,
        evidence_window_days=window_days,
    )


def _render_real(value: float) -> str:
    if math.isnan(value) or math.isinf(value):
        raise SchemaViolation("non-finite real in packet")
    if value == 0.0:
        value = 0.0  # canonical zero; "-0" would not survive a reparse
    return "%.6g" % value


def _emit(value: object, out: list[str], indent: int, key_order: tuple[str, ...] | None) -> None:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        keys = list(key_order) if key_order is not None else sorted(value)
        out.append("{\n")
        for pos, key in enumerate(keys):
            out.append(f"{inner}{json.dumps(key)}: ")
            _emit(value[key], out, indent + 1, None)
            out.append(",\n" if pos < len(keys) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        out.append("[\n")
        for pos, item in enumerate(value):
            out.append(inner)
            _emit(item, out, indent + 1, None)
            out.append(",\n" if pos < len(value) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(_render_real(value))
    else:
        raise SchemaViolation(f"unserializable value of type {type(value).__name__}")


def canonical_json(value: object, top_order: tuple[str, ...] | None = None) -> str:
    """Render a plain document with the packet's formatting policy.

    top_order fixes the root object's key sequence; everything nested is
    lexicographic. Reals use at most six significant digits.
    """
    out: list[str] = []
    _emit(value, out, 0, top_order)
    return "".join(out)


def _digest_doc(digest: WorkOrderDigest) -> dict[str, object]:
    return {
        "days_delayed": digest.days_delayed,
        "description_excerpt": digest.description_excerpt,
        "problem_code": digest.problem_code,
        "reported_date": format_timestamp(digest.reported_date),
        "status": digest.status.value,
        "wo_type": digest.wo_type.value,
        "wonum": digest.wonum,
    }


def _workorder_doc(wo: WorkorderFacts) -> dict[str, object]:
    return {
        "counts": dict(wo.counts),
        "status_counts": dict(wo.status_counts),
        "open_count": wo.open_count,
        "delayed_count": wo.delayed_count,
        "emergency_count": wo.emergency_count,
        "preventive_workorders": [_digest_doc(d) for d in wo.preventive_workorders],
        "corrective_and_other_workorders": [
            _digest_doc(d) for d in wo.corrective_and_other_workorders
        ],
        "window_days": wo.window_days,
    }


def _event_doc(event: MeterEvent) -> dict[str, object]:
    return {
        "index": event.index,
        "kind": event.kind.value,
        "magnitude": event.magnitude,
        "timestamp": format_timestamp(event.timestamp),
        "value": event.value,
    }


def _summary_doc(summary: GaugeSummary | ContinuousSummary | None) -> dict[str, object] | None:
    if summary is None:
        return None
    if isinstance(summary, GaugeSummary):
        ts, reading = summary.latest
        return {
            "latest": {"timestamp": format_timestamp(ts), "value": reading},
            "max": summary.max,
            "mean": summary.mean,
            "min": summary.min,
            "n": summary.n,
            "std": summary.std,
        }
    return {
        "increment_mean": summary.increment_mean,
        "increment_std": summary.increment_std,
        "n_increments": summary.n_increments,
        "normal_band": list(summary.normal_band),
        "total_delta": summary.total_delta,
    }


def _meter_doc(facts: MeterFacts) -> dict[str, object]:
    return {
        "asset_number": facts.asset_number,
        "events": [_event_doc(e) for e in facts.events],
        "insufficient_data": facts.insufficient_data,
        "meter_name": facts.meter_name,
        "meter_type": facts.meter_type.value,
        "n": facts.n,
        "summary": _summary_doc(facts.summary),
        "unit": facts.unit,
    }


def _alert_doc(alert: Alert) -> dict[str, object]:
    return {
        "active": alert.active,
        "alert_id": alert.alert_id,
        "asset_number": alert.asset_number,
        "message": alert.message,
        "raised_at": format_timestamp(alert.raised_at),
        "severity": alert.severity.value,
    }


def _fmea_doc(group: FmeaFactsGroup) -> dict[str, object]:
    return {
        "actions": list(group.actions),
        "component": group.component,
        "mass": group.mass,
        "mechanism": group.mechanism,
        "supporting_wonums": list(group.supporting_wonums),
    }


def _details_doc(details: AssetDetails) -> dict[str, object]:
    return {
        "asset_age_in_years": details.asset_age_in_years,
        "asset_number": details.asset_number,
        "description": details.description,
        "failure_code": details.failure_code,
        "is_running": details.is_running,
        "manufacturer": details.manufacturer,
        "priority": details.priority,
        "site_ID": details.site_id,
        "status": details.status.value,
    }


def _score_doc(score: HealthScore) -> dict[str, object]:
    return {
        "meaning": score.meaning,
        "range": list(score.range),
        "value": score.value,
    }


def facts_document(facts: AssetFacts) -> dict[str, object]:
    """Plain-dict form of the packet, prior to text rendering."""
    return {
        "asset_facts": {
            "asset_details_facts": _details_doc(facts.asset_details_facts),
            "workorder_facts": _workorder_doc(facts.workorder_facts),
            "meter_facts": [_meter_doc(m) for m in facts.meter_facts],
            "alert_facts": [_alert_doc(a) for a in facts.alert_facts],
            "fmea_facts": [_fmea_doc(g) for g in facts.fmea_facts],
            "health_scores": {
                name: _score_doc(score) for name, score in facts.health_scores.items()
            },
        },
        "evidence_window_days": facts.evidence_window_days,
        "generated_at": format_timestamp(facts.generated_at),
        "schema_version": facts.schema_version,
    }


def serialize_asset_facts(facts: AssetFacts) -> str:
    document = facts_document(facts)
    out: list[str] = []
    out.append("{\n")
    for pos, key in enumerate(ROOT_KEYS):
        out.append(f'  {json.dumps(key)}: ')
        if key == "asset_facts":
            block = document[key]
            block_out: list[str] = ["{\n"]
            for bpos, bkey in enumerate(FACTS_BLOCK_KEYS):
                block_out.append(f"    {json.dumps(bkey)}: ")
                _emit(block[bkey], block_out, 2, None)
                block_out.append(",\n" if bpos < len(FACTS_BLOCK_KEYS) - 1 else "\n")
            block_out.append("  }")
            out.extend(block_out)
        else:
            _emit(document[key], out, 1, None)
        out.append(",\n" if pos < len(ROOT_KEYS) - 1 else "\n")
    out.append("}")
    return "".join(out)


def _expect(mapping: object, keys: tuple[str, ...], where: str) -> dict[str, object]:
    if not isinstance(mapping, dict):
        raise SchemaViolation(f"{where}: expected object")
    missing = [k for k in keys if k not in mapping]
    if missing:
        raise SchemaViolation(f"{where}: missing keys {missing}")
    extra = [k for k in mapping if k not in keys]
    if extra:
        raise SchemaViolation(f"{where}: unexpected keys {extra}")
    return mapping


def _parse_digest(doc: object) -> WorkOrderDigest:
    d = _expect(
        doc,
        (
            "days_delayed",
            "description_excerpt",
            "problem_code",
            "reported_date",
            "status",
            "wo_type",
            "wonum",
        ),
        "work order digest",
    )
    return WorkOrderDigest(
        wonum=str(d["wonum"]),
        wo_type=WorkOrderType(d["wo_type"]),
        status=WorkOrderStatus(d["status"]),
        reported_date=parse_timestamp(d["reported_date"]),
        days_delayed=int(d["days_delayed"]),
        description_excerpt=str(d["description_excerpt"]),
        problem_code=None if d["problem_code"] is None else str(d["problem_code"]),
    )


def _parse_workorder_facts(doc: object) -> WorkorderFacts:
    d = _expect(
        doc,
        (
            "counts",
            "status_counts",
            "open_count",
            "delayed_count",
            "emergency_count",
            "preventive_workorders",
            "corrective_and_other_workorders",
            "window_days",
        ),
        "workorder_facts",
    )
    return WorkorderFacts(
        counts={str(k): int(v) for k, v in dict(d["counts"]).items()},
        status_counts={str(k): int(v) for k, v in dict(d["status_counts"]).items()},
        open_count=int(d["open_count"]),
        delayed_count=int(d["delayed_count"]),
        emergency_count=int(d["emergency_count"]),
        preventive_workorders=tuple(_parse_digest(x) for x in list(d["preventive_workorders"])),
        corrective_and_other_workorders=tuple(
            _parse_digest(x) for x in list(d["corrective_and_other_workorders"])
        ),
        window_days=int(d["window_days"]),
    )


def _parse_event(doc: object) -> MeterEvent:
    d = _expect(doc, ("index", "kind", "magnitude", "timestamp", "value"), "meter event")
    return MeterEvent(
        kind=MeterEventKind(d["kind"]),
        index=int(d["index"]),
        timestamp=parse_timestamp(d["timestamp"]),
        value=float(d["value"]),
        magnitude=float(d["magnitude"]),
    )


def _parse_summary(doc: object, meter_type: MeterType):
    if doc is None:
        return None
    if meter_type is MeterType.GAUGE:
        d = _expect(doc, ("latest", "max", "mean", "min", "n", "std"), "gauge summary")
        latest = _expect(d["latest"], ("timestamp", "value"), "latest reading")
        return GaugeSummary(
            mean=float(d["mean"]),
            std=float(d["std"]),
            min=float(d["min"]),
            max=float(d["max"]),
            latest=(parse_timestamp(latest["timestamp"]), float(latest["value"])),
            n=int(d["n"]),
        )
    d = _expect(
        doc,
        ("increment_mean", "increment_std", "n_increments", "normal_band", "total_delta"),
        "continuous summary",
    )
    band = list(d["normal_band"])
    if len(band) != 2:
        raise SchemaViolation("normal_band must have two entries")
    return ContinuousSummary(
        increment_mean=float(d["increment_mean"]),
        increment_std=float(d["increment_std"]),
        normal_band=(float(band[0]), float(band[1])),
        total_delta=float(d["total_delta"]),
        n_increments=int(d["n_increments"]),
    )


def _parse_meter(doc: object) -> MeterFacts:
    d = _expect(
        doc,
        (
            "asset_number",
            "events",
            "insufficient_data",
            "meter_name",
            "meter_type",
            "n",
            "summary",
            "unit",
        ),
        "meter facts",
    )
    meter_type = MeterType(d["meter_type"])
    return MeterFacts(
        asset_number=str(d["asset_number"]),
        meter_name=str(d["meter_name"]),
        meter_type=meter_type,
        unit=str(d["unit"]),
        n=int(d["n"]),
        summary=_parse_summary(d["summary"], meter_type),
        events=tuple(_parse_event(x) for x in list(d["events"])),
        insufficient_data=bool(d["insufficient_data"]),
    )


def _parse_alert(doc: object) -> Alert:
    d = _expect(
        doc,
        ("active", "alert_id", "asset_number", "message", "raised_at", "severity"),
        "alert",
    )
    return Alert(
        alert_id=str(d["alert_id"]),
        asset_number=str(d["asset_number"]),
        severity=AlertSeverity(d["severity"]),
        raised_at=parse_timestamp(d["raised_at"]),
        active=bool(d["active"]),
        message=str(d["message"]),
    )


def _parse_fmea_group(doc: object) -> FmeaFactsGroup:
    d = _expect(
        doc,
        ("actions", "component", "mass", "mechanism", "supporting_wonums"),
        "fmea group",
    )
    return FmeaFactsGroup(
        component=str(d["component"]),
        mechanism=str(d["mechanism"]),
        actions=tuple(str(a) for a in list(d["actions"])),
        mass=float(d["mass"]),
        supporting_wonums=tuple(str(w) for w in list(d["supporting_wonums"])),
    )


def _parse_details(doc: object) -> AssetDetails:
    d = _expect(
        doc,
        (
            "asset_age_in_years",
            "asset_number",
            "description",
            "failure_code",
            "is_running",
            "manufacturer",
            "priority",
            "site_ID",
            "status",
        ),
        "asset_details_facts",
    )
    return AssetDetails(
        asset_number=str(d["asset_number"]),
        description=str(d["description"]),
        site_id=str(d["site_ID"]),
        priority=int(d["priority"]),
        status=AssetStatus(d["status"]),
        is_running=bool(d["is_running"]),
        failure_code=None if d["failure_code"] is None else str(d["failure_code"]),
        asset_age_in_years=float(d["asset_age_in_years"]),
        manufacturer=None if d["manufacturer"] is None else str(d["manufacturer"]),
    )


def _parse_score(name: str, doc: object) -> HealthScore:
    d = _expect(doc, ("meaning", "range", "value"), f"health score {name}")
    rng = list(d["range"])
    if len(rng) != 2:
        raise SchemaViolation("range must have two entries")
    return HealthScore(
        score_name=name,
        value=float(d["value"]),
        range=(float(rng[0]), float(rng[1])),
        meaning=str(d["meaning"]),
    )


def parse_asset_facts(text: str) -> AssetFacts:
    """Inverse of serialize_asset_facts; rejects structural deviations."""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc}") from exc
    root = _expect(document, ROOT_KEYS, "document root")
    block = _expect(root["asset_facts"], FACTS_BLOCK_KEYS, "asset_facts")
    scores_doc = block["health_scores"]
    if not isinstance(scores_doc, dict):
        raise SchemaViolation("health_scores: expected object")
    return AssetFacts(
        asset_details_facts=_parse_details(block["asset_details_facts"]),
        workorder_facts=_parse_workorder_facts(block["workorder_facts"]),
        meter_facts=tuple(_parse_meter(x) for x in list(block["meter_facts"])),
        alert_facts=tuple(_parse_alert(x) for x in list(block["alert_facts"])),
        fmea_facts=tuple(_parse_fmea_group(x) for x in list(block["fmea_facts"])),
        health_scores={
            str(name): _parse_score(str(name), doc) for name, doc in scores_doc.items()
        },
        generated_at=parse_timestamp(root["generated_at"]),
        evidence_window_days=int(root["evidence_window_days"]),
        schema_version=str(root["schema_version"]),
    )
