"""Distribution-aware matching of work-order texts to FMEA failure mechanisms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .embedding import EmbeddingProvider
from .errors import EmptyInput
from .model import FmeaEntry, WorkOrder
from .transport import TransportPlan, UotConfig, cost_matrix, solve_uot


@dataclass(frozen=True)
class FmeaMatch:
    wonum: str
    component: str
    mechanism: str
    mass: float
    rank: int


def fmea_text(entry: FmeaEntry) -> str:
    """Canonical text form of an FMEA row for embedding."""
    return f"{entry.component}: {entry.failure_mode} — {entry.mechanism}"


def source_masses(
    orders: list[WorkOrder],
    recency_tau_days: float | None = None,
    now: datetime | None = None,
) -> np.ndarray:
    """Work-order mass vector: uniform, or recency-weighted when tau is given."""
    n = len(orders)
    if recency_tau_days is None:
        return np.full(n, 1.0 / n)
    if now is None:
        raise ValueError("recency weighting requires a reference time")
    ages = np.array(
        [max(0.0, (now - o.reported_date).total_seconds() / 86400.0) for o in orders]
    )
    weights = np.exp(-ages / recency_tau_days)
    return weights / weights.sum()


def align_failure_modes(
    orders: list[WorkOrder],
    fmea: list[FmeaEntry],
    provider: EmbeddingProvider,
    cfg: UotConfig,
    top_k: int = 5,
    recency_tau_days: float | None = None,
    now: datetime | None = None,
) -> list[FmeaMatch]:
    """Top-k FMEA hypotheses per work order by transported mass.

    Order descriptions and FMEA rows are embedded in one shared space, the
    relaxed transport plan is solved over squared Euclidean costs, and each
    order's rows are ranked by mass descending with a lexicographic
    (component, mechanism) tie-break.
    """
    if not orders or not fmea:
        raise EmptyInput("alignment needs at least one work order and one FMEA row")
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    order_texts = [o.description for o in orders]
    fmea_texts = [fmea_text(entry) for entry in fmea]
    vectors = provider.embed(order_texts + fmea_texts)
    sources = vectors[: len(orders)]
    targets = vectors[len(orders):]
    cost = cost_matrix(sources, targets)
    w = source_masses(orders, recency_tau_days, now)
    m = np.full(len(fmea), 1.0 / len(fmea))
    plan = solve_uot(cost, w, m, cfg)
    return rank_matches(orders, fmea, plan, top_k)


def rank_matches(
    orders: list[WorkOrder],
    fmea: list[FmeaEntry],
    plan: TransportPlan,
    top_k: int,
) -> list[FmeaMatch]:
    matches: list[FmeaMatch] = []
    for i, order in enumerate(orders):
        row = plan.matrix[i]
        ranked = sorted(
            range(len(fmea)),
            key=lambda j: (-row[j], fmea[j].component, fmea[j].mechanism),
        )
        for rank, j in enumerate(ranked[:top_k], start=1):
            mass = float(row[j])
            if not math.isfinite(mass) or mass < 0:
                raise ValueError(f"invalid transported mass at ({i}, {j}): {mass}")
            matches.append(
                FmeaMatch(
                    wonum=order.wonum,
                    component=fmea[j].component,
                    mechanism=fmea[j].mechanism,
                    mass=mass,
                    rank=rank,
                )
            )
    return matches
