"""Distances between empirical measures.

Exact Wasserstein costs via a Jonker-Volgenant style assignment solver
(scipy.optimize.linear_sum_assignment) for uniform equal-size supports,
an LP fallback on the product support for general weights, the
truncated max-norm metric used to compare occupation measures, and an
entropic (Sinkhorn) approximation with a duality-gap certificate for
large supports.

Base costs between atoms: "sup_norm" is the max over grid points of the
Euclidean norm of the difference (for point atoms this is the Euclidean
distance), "euclidean" flattens the whole segment, and
("weighted_alpha", alpha, split) is alpha * sup-norm of the first
`split` coordinates plus the sup-norm of the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .core import EmpiricalMeasure

__all__ = [
    "CostMatrix",
    "TransportPlan",
    "base_cost_matrix",
    "cost_matrix",
    "wasserstein",
    "rho_distance",
    "sinkhorn",
    "transport_plan",
]


@dataclass
class CostMatrix:
    entries: np.ndarray  # (n, m) nonnegative, already raised to power p
    p: float


@dataclass
class TransportPlan:
    pairings: np.ndarray  # (n, m) coupling weights
    objective: float

    def marginals(self):
        return self.pairings.sum(axis=1), self.pairings.sum(axis=0)


def _atom_cost_block(A, B, metric):
    """Pairwise base cost between atom blocks A (a,g,d) and B (b,g,d)."""
    diff = A[:, None, :, :] - B[None, :, :, :]  # (a, b, g, d)
    if metric == "sup_norm":
        return np.linalg.norm(diff, axis=3).max(axis=2)
    if metric == "euclidean":
        a, b = diff.shape[:2]
        return np.linalg.norm(diff.reshape(a, b, -1), axis=2)
    if isinstance(metric, tuple) and metric[0] == "weighted_alpha":
        _, alpha, split = metric
        d1 = np.linalg.norm(diff[..., :split], axis=3).max(axis=2)
        d2 = np.linalg.norm(diff[..., split:], axis=3).max(axis=2)
        return alpha * d1 + d2
    raise ValueError(f"unknown metric {metric!r}")


def base_cost_matrix(mu: EmpiricalMeasure, nu: EmpiricalMeasure,
                     metric="sup_norm", block_rows=256):
    """Pairwise base distances between the atoms of mu and nu."""
    if mu.dim != nu.dim or mu.n_grid != nu.n_grid:
        raise ValueError(
            f"incompatible atoms: ({mu.n_grid},{mu.dim}) vs ({nu.n_grid},{nu.dim})")
    n, m = mu.n_atoms, nu.n_atoms
    out = np.empty((n, m))
    for lo in range(0, n, block_rows):
        hi = min(lo + block_rows, n)
        out[lo:hi] = _atom_cost_block(mu.atoms[lo:hi], nu.atoms, metric)
    return out


def cost_matrix(mu, nu, p=2.0, metric="sup_norm", truncate=False) -> CostMatrix:
    """Pairwise p-power costs; with truncate=True the base distance is
    clipped at 1 first."""
    if p <= 0:
        raise ValueError("p must be positive")
    base = base_cost_matrix(mu, nu, metric)
    if truncate:
        base = np.minimum(base, 1.0)
    return CostMatrix(base ** p if p != 1.0 else base, p)


def _is_uniform(w):
    return np.allclose(w, 1.0 / len(w), rtol=0, atol=1e-12)


def _solve_assignment(cost_p):
    rows, cols = linear_sum_assignment(cost_p)
    # linear_sum_assignment already returns rows sorted ascending, which
    # fixes the lowest-index tie-break among optimal permutations.
    total = float(cost_p[rows, cols].sum()) / cost_p.shape[0]
    return (rows, cols), total


def _solve_lp(cost_p, w_mu, w_nu):
    n, m = cost_p.shape
    if n * m > 250_000:
        raise ValueError(
            f"general-weight transport on {n}x{m} support is too large for the "
            "exact LP; subsample or use sinkhorn")
    # marginal constraints; drop one row to avoid redundancy
    a_eq = []
    b_eq = []
    for i in range(n):
        row = np.zeros(n * m)
        row[i * m:(i + 1) * m] = 1.0
        a_eq.append(row)
        b_eq.append(w_mu[i])
    for j in range(m - 1):
        col = np.zeros(n * m)
        col[j::m] = 1.0
        a_eq.append(col)
        b_eq.append(w_nu[j])
    res = linprog(cost_p.ravel(), A_eq=np.array(a_eq), b_eq=np.array(b_eq),
                  bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    plan = res.x.reshape(n, m)
    return plan, float(np.sum(plan * cost_p))


def transport_plan(mu, nu, p=2.0, metric="sup_norm", truncate=False):
    """Optimal coupling under cost d(xi, eta)^p (or d ^ p with d = base ^ 1).

    Returns (TransportPlan, total p-power cost).  With truncate=True the
    base cost is clipped at 1 before raising to the power p.
    """
    cost_p = cost_matrix(mu, nu, p, metric, truncate).entries
    uniform = (mu.n_atoms == nu.n_atoms
               and _is_uniform(mu.weights) and _is_uniform(nu.weights))
    if uniform:
        (rows, cols), total = _solve_assignment(cost_p)
        plan = np.zeros_like(cost_p)
        plan[rows, cols] = 1.0 / mu.n_atoms
        return TransportPlan(plan, total), total
    plan, total = _solve_lp(cost_p, mu.weights, nu.weights)
    return TransportPlan(plan, total), total


def wasserstein(mu, nu, p=2.0, metric="sup_norm"):
    """L^p optimal transport distance between two empirical measures.

    For p >= 1 returns the p-th root of the optimal p-power cost; for
    p in (0, 1) returns the optimal p-power cost itself (the usual
    convention that makes the distance a metric in that range).
    """
    _, total = transport_plan(mu, nu, p=p, metric=metric)
    if p >= 1.0:
        return total ** (1.0 / p)
    return total


def rho_distance(mu, nu):
    """Coupling distance with cost min(sup-norm difference, 1), in [0, 1].

    Metrizes weak convergence on path space; this is the yardstick the
    comparison experiments use for occupation measures.
    """
    _, total = transport_plan(mu, nu, p=1.0, metric="sup_norm", truncate=True)
    return total


def sinkhorn(mu, nu, p=2.0, epsilon_reg=1e-2, max_iter=5000, metric="sup_norm",
             gap_tol=0.05):
    """Entropic approximation of the p-power transport cost.

    Returns (value, error_bound) where value is an upper bound on the
    exact p-power cost obtained from a rounded feasible plan, and
    error_bound is a certified duality gap: exact >= value - error_bound.
    The regularization is annealed from a coarse level down to
    epsilon_reg.  Raises RuntimeError when max_iter sweeps leave a
    relative gap above gap_tol (remedy: increase epsilon_reg or
    max_iter).
    """
    best_ub, best_lb = _sinkhorn_bounds(mu, nu, p, epsilon_reg, max_iter, metric)[-1]
    gap = max(best_ub - best_lb, 0.0)
    if gap > gap_tol * max(1.0, abs(best_ub)):
        raise RuntimeError(
            f"sinkhorn did not converge in {max_iter} sweeps (gap {gap:.3g}); "
            "increase epsilon_reg or max_iter")
    return best_ub, gap


def _sinkhorn_bounds(mu, nu, p, epsilon_reg, max_iter, metric="sup_norm"):
    """Best-so-far (upper, lower) bound pairs after each outer block.

    The bounds are running optima, so the gap sequence is nonincreasing
    by construction.
    """
    if epsilon_reg <= 0:
        raise ValueError("epsilon_reg must be positive")
    cost = base_cost_matrix(mu, nu, metric)
    cost_p = cost ** p if p != 1.0 else cost
    a, b = mu.weights, nu.weights
    log_a, log_b = np.log(a), np.log(b)
    scale = max(cost_p.max(), 1e-300)

    eps = max(epsilon_reg, 0.05 * scale)
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    best_ub, best_lb = np.inf, -np.inf
    history = []
    it = 0
    while it < max_iter:
        block = min(10, max_iter - it)
        for _ in range(block):
            m_fg = (f[:, None] + g[None, :] - cost_p) / eps
            f = f + eps * (log_a - _logsumexp_rows(m_fg))
            m_fg = (f[:, None] + g[None, :] - cost_p) / eps
            g = g + eps * (log_b - _logsumexp_rows(m_fg.T))
        it += block
        plan = _round_to_feasible(np.exp((f[:, None] + g[None, :] - cost_p) / eps), a, b)
        ub = float(np.sum(plan * cost_p))
        # the c-transform of f gives an unregularized-dual feasible pair
        g_feas = np.min(cost_p - f[:, None], axis=0)
        lb = float(a @ f + b @ g_feas)
        best_ub = min(best_ub, ub)
        best_lb = max(best_lb, lb)
        history.append((best_ub, best_lb))
        if best_ub - best_lb <= 1e-12 * max(1.0, abs(best_ub)):
            break
        eps = max(epsilon_reg, eps * 0.5)
    return history


def _logsumexp_rows(m):
    mx = m.max(axis=1)
    return mx + np.log(np.sum(np.exp(m - mx[:, None]), axis=1))


def _round_to_feasible(plan, a, b):
    """Altschuler-style rounding of an almost-coupling onto the polytope."""
    r = plan.sum(axis=1)
    x = np.minimum(a / np.maximum(r, 1e-300), 1.0)
    plan = plan * x[:, None]
    c = plan.sum(axis=0)
    y = np.minimum(b / np.maximum(c, 1e-300), 1.0)
    plan = plan * y[None, :]
    da = a - plan.sum(axis=1)
    db = b - plan.sum(axis=0)
    total = da.sum()
    if total > 1e-300:
        plan = plan + np.outer(da, db) / total
    return plan
