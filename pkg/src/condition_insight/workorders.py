"""Work-order history summarization: counts, digests, recurring patterns."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from functools import lru_cache
from importlib import resources

from .model import WorkOrder, WorkOrderStatus, WorkOrderType

EXCERPT_MAX_CHARS = 300
_TOKEN_RE = re.compile(r"[a-z0-9]+")
_OPEN_STATUSES = frozenset({WorkOrderStatus.OPEN, WorkOrderStatus.IN_PROGRESS})


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    """Fixed maintenance stop-word list, versioned with the package."""
    text = (
        resources.files("condition_insight")
        .joinpath("data/stopwords_maintenance_en.txt")
        .read_text(encoding="utf-8")
    )
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def tokenize(text: str, min_length: int = 4) -> list[str]:
    """Lowercased alphanumeric tokens, stop-words removed, short tokens dropped."""
    words = _TOKEN_RE.findall(text.lower())
    stops = stopwords()
    return [w for w in words if len(w) >= min_length and w not in stops]


@dataclass(frozen=True)
class WorkOrderDigest:
    wonum: str
    wo_type: WorkOrderType
    status: WorkOrderStatus
    reported_date: datetime
    days_delayed: int
    description_excerpt: str
    problem_code: str | None


@dataclass(frozen=True)
class WorkorderFacts:
    counts: dict[str, int]
    status_counts: dict[str, int]
    open_count: int
    delayed_count: int
    emergency_count: int
    preventive_workorders: tuple[WorkOrderDigest, ...]
    corrective_and_other_workorders: tuple[WorkOrderDigest, ...]
    window_days: int


@dataclass(frozen=True)
class MaintenancePattern:
    token_or_code: str
    occurrence_count: int
    example_wonums: tuple[str, ...]


def _excerpt(text: str) -> str:
    text = " ".join(text.split())
    if len(text) <= EXCERPT_MAX_CHARS:
        return text
    cut = text.rfind(" ", 0, EXCERPT_MAX_CHARS + 1)
    if cut <= 0:
        cut = EXCERPT_MAX_CHARS
    return text[:cut].rstrip()


def _days_delayed(order: WorkOrder, now: datetime) -> int:
    """Whole days past the target date; orders without a target are never delayed."""
    if order.target_date is None:
        return 0
    reference = order.completion_date if order.completion_date is not None else now
    delta = reference - order.target_date
    return max(0, delta.days)


def _digest(order: WorkOrder, now: datetime) -> WorkOrderDigest:
    return WorkOrderDigest(
        wonum=order.wonum,
        wo_type=order.wo_type,
        status=order.status,
        reported_date=order.reported_date,
        days_delayed=_days_delayed(order, now),
        description_excerpt=_excerpt(order.description),
        problem_code=order.problem_code,
    )


def build_workorder_facts(
    orders: list[WorkOrder], window_days: int, now: datetime
) -> WorkorderFacts:
    """Summarize one asset's work orders over the trailing evidence window."""
    if window_days <= 0:
        raise ValueError("window_days must be positive")
    cutoff = now - timedelta(days=window_days)
    in_window = [o for o in orders if cutoff <= o.reported_date <= now]
    counts = {t.value: 0 for t in WorkOrderType}
    status_counts = {s.value: 0 for s in WorkOrderStatus}
    for order in in_window:
        counts[order.wo_type.value] += 1
        status_counts[order.status.value] += 1
    digests = sorted(
        (_digest(o, now) for o in in_window),
        key=lambda d: (d.reported_date, d.wonum),
        reverse=True,
    )
    return WorkorderFacts(
        counts=counts,
        status_counts=status_counts,
        open_count=sum(1 for o in in_window if o.status in _OPEN_STATUSES),
        delayed_count=sum(1 for d in digests if d.days_delayed > 0),
        emergency_count=counts[WorkOrderType.EMERGENCY.value],
        preventive_workorders=tuple(
            d for d in digests if d.wo_type is WorkOrderType.PREVENTIVE
        ),
        corrective_and_other_workorders=tuple(
            d for d in digests if d.wo_type is not WorkOrderType.PREVENTIVE
        ),
        window_days=window_days,
    )


def extract_patterns(orders: list[WorkOrder], min_support: int = 2) -> list[MaintenancePattern]:
    """Recurring problem codes and description tokens across work orders.

    A pattern's occurrence count is the number of distinct orders carrying
    the code or token; patterns below min_support are dropped. Output is
    ordered by count descending then token ascending, so it is invariant
    under permutation of the input.
    """
    if min_support < 2:
        raise ValueError("min_support must be at least 2")
    carriers: dict[str, set[str]] = {}
    for order in orders:
        keys = set(tokenize(order.description))
        if order.problem_code:
            keys.add(order.problem_code)
        for key in keys:
            carriers.setdefault(key, set()).add(order.wonum)
    patterns = [
        MaintenancePattern(
            token_or_code=key,
            occurrence_count=len(wonums),
            example_wonums=tuple(sorted(wonums)[:3]),
        )
        for key, wonums in carriers.items()
        if len(wonums) >= min_support
    ]
    patterns.sort(key=lambda p: (-p.occurrence_count, p.token_or_code))
    return patterns
