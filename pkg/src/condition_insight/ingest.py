"""File ingestion: CSV and JSON-lines evidence into the store.

Files are classified by their header (CSV) or first object's keys (JSONL),
not by filename, so renamed exports still land in the right entity. Bad rows
never abort a file: each is recorded with its line number and reason, both
in the returned report and in a reject file under the store root.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping

from .errors import EmptySeriesWarning, FormatError, RecordValidationError, UnreadableFile
from .model import (
    alert_record,
    asset_record,
    fmea_record,
    meter_series_record,
    validate_alert,
    validate_asset,
    validate_fmea_entry,
    validate_meter_series,
    validate_work_order,
    work_order_record,
)
from .store import FileStore


@dataclass(frozen=True)
class RejectedRow:
    path: str
    line: int
    reason: str


@dataclass(frozen=True)
class IngestReport:
    accepted: int
    rejected: int
    duplicates: int
    by_entity: dict[str, int]
    rejects: tuple[RejectedRow, ...]
    reject_file: str | None


# entity -> (validator over a raw row, canonical record form, natural key)
_ENTITY_HANDLERS: dict[str, tuple[Callable, Callable, Callable]] = {
    "assets": (validate_asset, asset_record, lambda a: a.asset_number),
    "workorders": (validate_work_order, work_order_record, lambda w: w.wonum),
    "meters": (
        validate_meter_series,
        meter_series_record,
        lambda m: f"{m.asset_number}/{m.meter_name}",
    ),
    "fmea": (
        validate_fmea_entry,
        fmea_record,
        lambda e: "|".join((e.asset_class, e.component, e.failure_mode, e.mechanism)),
    ),
    "alerts": (validate_alert, alert_record, lambda a: a.alert_id),
}


def _classify_csv_header(header: list[str], path: Path) -> str:
    columns = {column.strip() for column in header}
    if "wonum" in columns:
        return "workorders"
    if "failure_mode" in columns:
        return "fmea"
    if "asset_number" in columns:
        return "assets"
    raise FormatError(path, 1, f"unrecognized CSV header {sorted(columns)}")


def _classify_jsonl_object(obj: Mapping[str, object], path: Path, line: int) -> str:
    if "readings" in obj:
        return "meters"
    if "alert_id" in obj:
        return "alerts"
    raise FormatError(path, line, f"unrecognized JSON object keys {sorted(obj)}")


def _iter_csv_rows(path: Path) -> Iterator[tuple[str, int, Mapping[str, object] | str]]:
    """Yield (entity, line, row-or-error) triples for one CSV file."""
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise FormatError(path, 0, "empty file, no header")
        entity = _classify_csv_header(list(reader.fieldnames), path)
        for row in reader:
            if row.get(None) is not None:
                yield entity, reader.line_num, "row has more fields than the header"
                continue
            yield entity, reader.line_num, row


def _iter_jsonl_rows(path: Path) -> Iterator[tuple[str, int, Mapping[str, object] | str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    entity: str | None = None
    for line_num, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            if entity is None:
                raise FormatError(path, line_num, f"not valid JSON: {exc.msg}") from exc
            yield entity, line_num, f"not valid JSON: {exc.msg}"
            continue
        if not isinstance(obj, dict):
            if entity is None:
                raise FormatError(path, line_num, "expected a JSON object per line")
            yield entity, line_num, "expected a JSON object"
            continue
        if entity is None:
            entity = _classify_jsonl_object(obj, path, line_num)
        yield entity, line_num, obj


def _iter_rows(path: Path) -> Iterator[tuple[str, int, Mapping[str, object] | str]]:
    suffix = path.suffix.lower()
    if suffix == ".csv":
        yield from _iter_csv_rows(path)
    elif suffix in (".jsonl", ".ndjson", ".json"):
        yield from _iter_jsonl_rows(path)
    else:
        raise FormatError(path, 0, f"unsupported file type {suffix!r}")


def ingest(paths: Iterable[str | Path], store: FileStore | str | Path) -> IngestReport:
    """Validate and persist every row of the given files.

    Re-ingesting the same content is a no-op counted under duplicates.
    Raises UnreadableFile for a missing file and FormatError for a file whose
    shape cannot be classified at all; row-level problems become rejects.
    """
    if not isinstance(store, FileStore):
        store = FileStore(store)
    accepted = 0
    duplicates = 0
    by_entity: dict[str, int] = {}
    rejects: list[RejectedRow] = []

    for raw_path in paths:
        path = Path(raw_path)
        if not path.exists():
            raise UnreadableFile(f"no such file: {path}")
        for entity, line_num, row in _iter_rows(path):
            if isinstance(row, str):
                rejects.append(RejectedRow(str(path), line_num, row))
                continue
            validate, to_record, natural_key = _ENTITY_HANDLERS[entity]
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", EmptySeriesWarning)
                    value = validate(row)
            except RecordValidationError as exc:
                rejects.append(RejectedRow(str(path), line_num, str(exc)))
                continue
            _, was_duplicate = store.put(entity, natural_key(value), to_record(value))
            if was_duplicate:
                duplicates += 1
            else:
                accepted += 1
                by_entity[entity] = by_entity.get(entity, 0) + 1

    reject_file: str | None = None
    if rejects:
        reject_path = store.root / "rejects.txt"
        with reject_path.open("a", encoding="utf-8") as handle:
            for reject in rejects:
                handle.write(f"{reject.path}:{reject.line}: {reject.reason}\n")
        reject_file = str(reject_path)

    return IngestReport(
        accepted=accepted,
        rejected=len(rejects),
        duplicates=duplicates,
        by_entity=by_entity,
        rejects=tuple(rejects),
        reject_file=reject_file,
    )
