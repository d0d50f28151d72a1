"""Entropic unbalanced optimal transport via generalized alternating scaling.

Solves

    min_{T >= 0}  <C, T> - eps * H(T) + rho1 * KL(T 1, w) + rho2 * KL(T' 1, m)

with H(T) = -sum T_ij (log T_ij - 1) and KL(a, b) = sum a log(a/b) - a + b.
The scaling recursion damps the classic Sinkhorn updates by
rho / (rho + eps) on each side; rho -> inf recovers balanced transport,
eps -> inf flattens the plan toward the product measure.

Summations over the source axis go through a sort-before-sum reduction, so
permuting source points and weights permutes the rows of the returned plan
bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveMass, NumericalOverflow

LOG_DOMAIN_EPSILON = 0.01


@dataclass(frozen=True)
class UotConfig:
    """Solver knobs. tol bounds the sweep-to-sweep change of the dual sums
    f_i + g_j (f = eps * log u, g = eps * log v), the only combination the
    plan depends on. The transpose shift (f + c, g - c) leaves the plan,
    marginals, and objective untouched but relaxes at rate eps / rho, so it
    is deliberately outside the stopping test."""

    epsilon: float = 0.05
    rho_source: float = 1.0
    rho_target: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-9

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.rho_source <= 0 or self.rho_target <= 0:
            raise ValueError("rho values must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class TransportPlan:
    matrix: np.ndarray
    source_marginal: np.ndarray
    target_marginal: np.ndarray
    objective: float
    iterations: int
    converged: bool


def cost_matrix(sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean costs; swapping arguments transposes it."""
    sources = np.asarray(sources, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if sources.ndim != 2 or targets.ndim != 2:
        raise DimensionMismatch("expected 2-d arrays of row vectors")
    if sources.shape[1] != targets.shape[1]:
        raise DimensionMismatch(
            f"source dimension {sources.shape[1]} != target dimension {targets.shape[1]}"
        )
    diff = sources[:, None, :] - targets[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _sorted_colsum(products: np.ndarray) -> np.ndarray:
    # Sum over axis 0 in value order: the result depends only on the multiset
    # of summands per column, making row permutations bit-exact.
    return np.sum(np.sort(products, axis=0), axis=0)


def _sorted_col_logsumexp(scores: np.ndarray) -> np.ndarray:
    shift = np.max(scores, axis=0)
    return shift + np.log(_sorted_colsum(np.exp(scores - shift)))


def _paired_change(delta_phi: np.ndarray, delta_psi: np.ndarray) -> float:
    # max over (i, j) of |delta_phi_i + delta_psi_j| without forming the outer sum
    high = float(np.max(delta_phi) + np.max(delta_psi))
    low = float(np.min(delta_phi) + np.min(delta_psi))
    return max(abs(high), abs(low))


def entropy(plan: np.ndarray) -> float:
    """H(T) = -sum T_ij (log T_ij - 1), with 0 log 0 = 0."""
    positive = plan[plan > 0]
    return float(-np.sum(positive * (np.log(positive) - 1.0)))


def kl_divergence(a: np.ndarray, b: np.ndarray) -> float:
    """Generalized KL(a, b) = sum a log(a/b) - a + b for nonnegative a, positive b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    terms = np.where(a > 0, a * np.log(np.divide(a, b, out=np.ones_like(a), where=a > 0)), 0.0)
    return float(np.sum(terms - a + b))


def uot_objective(
    plan: np.ndarray, cost: np.ndarray, w: np.ndarray, m: np.ndarray, cfg: UotConfig
) -> float:
    """Objective value of an arbitrary feasible plan."""
    plan = np.asarray(plan, dtype=float)
    transport_cost = float(np.sum(cost * plan))
    fidelity_source = kl_divergence(plan.sum(axis=1), w)
    fidelity_target = kl_divergence(_sorted_colsum(plan), m)
    return (
        transport_cost
        - cfg.epsilon * entropy(plan)
        + cfg.rho_source * fidelity_source
        + cfg.rho_target * fidelity_target
    )


def _validate_inputs(cost: np.ndarray, w: np.ndarray, m: np.ndarray) -> None:
    if cost.ndim != 2 or cost.shape != (w.shape[0], m.shape[0]):
        raise DimensionMismatch(
            f"cost shape {cost.shape} incompatible with masses {w.shape[0]}x{m.shape[0]}"
        )
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    if w.size == 0 or m.size == 0 or np.any(w <= 0) or np.any(m <= 0):
        raise NonPositiveMass("mass vectors must be strictly positive")


def _solve_scaling(cost: np.ndarray, w: np.ndarray, m: np.ndarray, cfg: UotConfig):
    kernel = np.exp(-cost / cfg.epsilon)
    zero_rows = np.where(~np.any(kernel > 0, axis=1))[0]
    if zero_rows.size:
        raise NumericalOverflow("row", int(zero_rows[0]))
    zero_cols = np.where(~np.any(kernel > 0, axis=0))[0]
    if zero_cols.size:
        raise NumericalOverflow("column", int(zero_cols[0]))
    exp_source = cfg.rho_source / (cfg.rho_source + cfg.epsilon)
    exp_target = cfg.rho_target / (cfg.rho_target + cfg.epsilon)
    u = np.ones_like(w)
    v = np.ones_like(m)
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        u_prev, v_prev = u, v
        kv = np.sum(kernel * v[None, :], axis=1)
        dead_rows = np.where(kv == 0.0)[0]
        if dead_rows.size:
            raise NumericalOverflow("row", int(dead_rows[0]))
        u = (w / kv) ** exp_source
        ktu = _sorted_colsum(kernel * u[:, None])
        dead_cols = np.where(ktu == 0.0)[0]
        if dead_cols.size:
            raise NumericalOverflow("column", int(dead_cols[0]))
        v = (m / ktu) ** exp_target
        err = cfg.epsilon * _paired_change(
            np.log(u) - np.log(u_prev), np.log(v) - np.log(v_prev)
        )
        if err < cfg.tol:
            converged = True
            break
    plan = u[:, None] * kernel * v[None, :]
    return plan, iterations, converged


_WARMUP_STAGE_ITER = 500
_WARMUP_STAGE_TOL = 1e-8


def _epsilon_schedule(cost: np.ndarray, target: float) -> list[float]:
    # Coarse-to-fine regularization: halve from the cost spread down to the
    # requested value. A single-entry schedule degenerates to plain scaling.
    span = float(np.max(cost) - np.min(cost))
    schedule = [target]
    eps = target
    while eps * 2.0 < span:
        eps *= 2.0
        schedule.append(eps)
    schedule.reverse()
    return schedule


def _solve_scaling_log(cost: np.ndarray, w: np.ndarray, m: np.ndarray, cfg: UotConfig):
    # Same recursion in log scale: phi = log u, psi = log v. Tiny epsilon
    # makes the plain recursion crawl, so warm-start down an epsilon ladder,
    # rescaling the potentials so the duals f = eps * phi carry over. Only
    # the last rung solves the requested problem; cfg.max_iter and cfg.tol
    # apply there, while iterations counts every update including warm-up.
    log_w = np.log(w)
    log_m = np.log(m)
    schedule = _epsilon_schedule(cost, cfg.epsilon)
    phi = np.zeros_like(w)
    psi = np.zeros_like(m)
    total_iterations = 0
    converged = False
    prev_eps = schedule[0]
    for stage, eps in enumerate(schedule):
        phi = phi * (prev_eps / eps)
        psi = psi * (prev_eps / eps)
        prev_eps = eps
        final = stage == len(schedule) - 1
        budget = cfg.max_iter if final else min(cfg.max_iter, _WARMUP_STAGE_ITER)
        tol = cfg.tol if final else max(cfg.tol, _WARMUP_STAGE_TOL)
        neg_cost = -cost / eps
        exp_source = cfg.rho_source / (cfg.rho_source + eps)
        exp_target = cfg.rho_target / (cfg.rho_target + eps)
        for _ in range(budget):
            total_iterations += 1
            phi_prev, psi_prev = phi, psi
            # logsumexp over targets is row-local; over sources it is sorted.
            row_scores = neg_cost + psi[None, :]
            row_shift = np.max(row_scores, axis=1)
            log_kv = row_shift + np.log(
                np.sum(np.exp(row_scores - row_shift[:, None]), axis=1)
            )
            phi = exp_source * (log_w - log_kv)
            log_ktu = _sorted_col_logsumexp(neg_cost + phi[:, None])
            psi = exp_target * (log_m - log_ktu)
            err = eps * _paired_change(phi - phi_prev, psi - psi_prev)
            if err < tol:
                converged = final
                break
    plan = np.exp(phi[:, None] + psi[None, :] - cost / cfg.epsilon)
    return plan, total_iterations, converged


def solve_uot(cost: np.ndarray, w: np.ndarray, m: np.ndarray, cfg: UotConfig) -> TransportPlan:
    """Solve the relaxed transport problem between mass vectors w and m.

    Raises NonPositiveMass for invalid masses and NumericalOverflow when the
    kernel underflows an entire row or column (only possible on the standard
    path; small epsilon switches to the log-domain recursion).
    """
    cost = np.asarray(cost, dtype=float)
    w = np.asarray(w, dtype=float)
    m = np.asarray(m, dtype=float)
    _validate_inputs(cost, w, m)
    if cfg.epsilon < LOG_DOMAIN_EPSILON:
        plan, iterations, converged = _solve_scaling_log(cost, w, m, cfg)
    else:
        plan, iterations, converged = _solve_scaling(cost, w, m, cfg)
    return TransportPlan(
        matrix=plan,
        source_marginal=plan.sum(axis=1),
        target_marginal=_sorted_colsum(plan),
        objective=uot_objective(plan, cost, w, m, cfg),
        iterations=iterations,
        converged=converged,
    )
