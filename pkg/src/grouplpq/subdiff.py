"""Subgradient selections for the objective and its linearised surrogate.

Everything here builds explicit elements of (limiting) subdifferentials and
measures their norms. Coordinates are always those of the groups in a given
support, in group order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear, minimize

from .model import INF, GroupedVector, ProblemSpec, SupportSet, group_support
from .prox import group_l2_shrink, prox_weighted_group_lp, soft_threshold

LINF_TIE_RTOL = 1e-9


def phi_prime(t, q):
    """Derivative ``q t^(q-1)`` of ``t -> t^q``; undefined at ``t <= 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("phi_prime is only defined for t > 0")
    out = q * t ** (q - 1.0)
    return float(out) if out.ndim == 0 else out


def linearization_weights(x: GroupedVector, S: SupportSet, p, q) -> np.ndarray:
    """``phi'(||x_i||_p)`` for each ``i`` in ``S`` (in support order)."""
    idx = SupportSet(tuple(S)).as_array()
    norms = x.norms(p)[idx]
    if np.any(norms <= 0):
        bad = idx[norms <= 0].tolist()
        raise ValueError(f"groups {bad} are zero but listed in the support")
    return np.atleast_1d(phi_prime(norms, q))


@dataclass
class FidelitySubgradient:
    eta: np.ndarray
    """Fidelity subgradient on the support coordinates."""
    selection: np.ndarray
    """Residual-space vector ``g`` with ``eta = A_S^T g / alpha``."""
    ties: np.ndarray
    """Residual indices where the selection is not unique."""


@dataclass
class SubgradComponents:
    zeta: np.ndarray
    eta: np.ndarray
    beta_term: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.zeta + self.eta + self.beta_term


@dataclass
class Certificate:
    u_norm: float
    bound: float
    satisfied: bool
    components: SubgradComponents | None = None


def _linf_ties(res):
    top = np.max(np.abs(res), initial=0.0)
    if top == 0.0:
        return np.arange(res.size), top
    return np.flatnonzero(np.abs(res) >= (1.0 - LINF_TIE_RTOL) * top), top


def residual_selection(res: np.ndarray, r):
    """Canonical element ``g`` of the subdifferential of ``(1/r)||.||_r^r`` (or ``||.||_inf``) at ``res``.

    ``sgn(0) = 0`` for ``r = 1``; for the max-norm the unit mass is split
    evenly over the tied maximal entries. Returns ``(g, ties)``.
    """
    if r is INF:
        ties, top = _linf_ties(res)
        g = np.zeros_like(res)
        if top > 0:
            g[ties] = np.sign(res[ties]) / ties.size
        return g, ties
    if r == 1:
        return np.sign(res), np.flatnonzero(res == 0)
    if r == 2:
        return res.copy(), np.zeros(0, dtype=np.intp)
    return np.abs(res) ** (r - 1.0) * np.sign(res), np.zeros(0, dtype=np.intp)


def fidelity_subgradient(problem: ProblemSpec, x: GroupedVector, S: SupportSet) -> FidelitySubgradient:
    cols = problem.partition.coordinates(S)
    A_S = problem.A[:, cols]
    res = A_S @ x.values[cols] - problem.y
    g, ties = residual_selection(res, problem.r)
    return FidelitySubgradient(A_S.T @ g / problem.alpha, g, ties)


def _group_term_min_norm(c, xs, weights, part, p):
    """Add the norm part of the surrogate's subgradient to ``c`` and shrink.

    ``weights`` are per group of ``part`` (the restricted partition). Nonzero
    groups with ``p > 1`` get the gradient; free coordinates (zero entries
    for ``p = 1``, zero groups for any ``p``) are picked to minimise the
    resulting magnitude. Returns ``(zeta, u)``.
    """
    zeta = np.zeros_like(c)
    u = np.empty_like(c)
    norms = part.norms(xs, p)
    w_coord = weights[part.labels]
    if p == 1:
        smooth = xs != 0
        zeta[smooth] = w_coord[smooth] * np.sign(xs[smooth])
        u[smooth] = c[smooth] + zeta[smooth]
        free = ~smooth
        u[free] = soft_threshold(c[free], w_coord[free])
        zeta[free] = u[free] - c[free]
        return zeta, u
    nz = norms[part.labels] > 0
    if nz.any():
        safe = np.where(nz, norms[part.labels], 1.0)
        grad = np.sign(xs) * (np.abs(xs) / safe) ** (p - 1.0)
        zeta[nz] = w_coord[nz] * grad[nz]
        u[nz] = c[nz] + zeta[nz]
    zero_groups = np.flatnonzero(norms == 0)
    if zero_groups.size:
        if p == 2:
            mask = ~nz
            sub = np.zeros_like(c)
            sub[mask] = c[mask]
            shr = group_l2_shrink(sub, np.where(norms == 0, weights, 0.0), 1.0, part)
            u[mask] = shr[mask]
        else:
            for i in zero_groups:
                sl = part.group_slice(int(i))
                u[sl] = prox_weighted_group_lp(c[sl], weights[i], 1.0, p)
        zeta[~nz] = u[~nz] - c[~nz]
    return zeta, u


def inexactness_certificate(problem: ProblemSpec, prev, candidate: GroupedVector, beta, epsilon) -> Certificate:
    """Check ``||u|| <= (beta/2) eps ||candidate - prev.x||`` for a small ``u`` in the surrogate's subdifferential.

    ``prev`` is the outer state (``x``, ``support``, ``weights``) the surrogate
    was built at. ``u`` is the minimum-norm element given the canonical
    fidelity selection.
    """
    S = prev.support
    part = problem.partition.restrict(S)
    step = float(np.linalg.norm(candidate.values - prev.x.values))
    bound = 0.5 * beta * epsilon * step
    if part is None:
        return Certificate(0.0, bound, True)
    cols = problem.partition.coordinates(S)
    outside = np.ones(problem.partition.size, dtype=bool)
    outside[cols] = False
    if np.any(candidate.values[outside] != 0):
        raise ValueError("candidate is not supported within prev.support")
    fid = fidelity_subgradient(problem, candidate, S)
    xs = candidate.values[cols]
    beta_term = beta * (xs - prev.x.values[cols])
    c = fid.eta + beta_term
    zeta, u = _group_term_min_norm(c, xs, np.asarray(prev.weights, dtype=float), part, problem.p)
    u_norm = float(np.linalg.norm(u))
    return Certificate(u_norm, bound, u_norm <= bound, SubgradComponents(zeta, fid.eta, beta_term))


def _least_norm_with_ties(c, B, box_idx, box_hw, simplex):
    """min ||c + B g + P zeta|| with zeta in a box and g in a box [-1,1] or the simplex.

    ``P`` scatters ``zeta`` into coordinates ``box_idx`` with half-widths
    ``box_hw``. ``simplex=True`` constrains ``g >= 0, sum g = 1``.
    """
    n = c.size
    k = B.shape[1]
    P = np.zeros((n, box_idx.size))
    P[box_idx, np.arange(box_idx.size)] = 1.0
    D = np.hstack([B, P])
    if D.shape[1] == 0:
        return c
    if not simplex:
        lb = np.concatenate([-np.ones(k), -box_hw])
        ub = np.concatenate([np.ones(k), box_hw])
        sol = lsq_linear(D, -c, bounds=(lb, ub), method="bvls", tol=1e-14)
        return c + D @ sol.x

    def f(v):
        r = c + D @ v
        return 0.5 * r @ r, D.T @ r

    v0 = np.concatenate([np.full(k, 1.0 / k), np.zeros(box_idx.size)])
    bounds = [(0.0, 1.0)] * k + [(-h, h) for h in box_hw]
    cons = [{"type": "eq", "fun": lambda v: v[:k].sum() - 1.0, "jac": lambda v: np.r_[np.ones(k), np.zeros(box_idx.size)]}]
    sol = minimize(f, v0, jac=True, bounds=bounds, constraints=cons, method="SLSQP",
                   options={"ftol": 1e-16, "maxiter": 500})
    return c + D @ sol.x


def stationarity_residual(problem: ProblemSpec, x: GroupedVector, zero_tol: float = 0.0) -> float:
    """Norm of the smallest constructible element of the objective's subdifferential at ``x``.

    Zero groups have the whole space as subdifferential and contribute
    nothing. On nonzero groups the norm part is exact; free choices (zero
    entries when ``p = 1``, tied residuals when ``r`` is 1 or inf) are
    optimised jointly by a small bounded least-squares problem.
    """
    S = group_support(x, zero_tol)
    if len(S) == 0:
        return 0.0
    part = problem.partition.restrict(S)
    cols = problem.partition.coordinates(S)
    A_S = problem.A[:, cols]
    xs = x.values[cols]
    res = problem.A @ x.values - problem.y
    alpha, p, r = problem.alpha, problem.p, problem.r
    weights = np.atleast_1d(phi_prime(part.norms(xs, p), problem.q))

    if r is INF:
        ties, top = _linf_ties(res)
        if top == 0.0:
            # subdifferential of the max-norm at 0 is the whole l1 ball, which contains 0
            ties = np.zeros(0, dtype=np.intp)
        g_fixed = np.zeros_like(res)
        B = A_S[ties].T * np.sign(res[ties]) / alpha
        simplex = ties.size > 0
    elif r == 1:
        zero_tol_res = 1e-12 * max(1.0, float(np.max(np.abs(problem.y), initial=0.0)))
        ties = np.flatnonzero(np.abs(res) <= zero_tol_res)
        g_fixed = np.sign(res)
        g_fixed[ties] = 0.0
        B = A_S[ties].T / alpha
        simplex = False
    else:
        g_fixed, _ = residual_selection(res, r)
        B = np.zeros((cols.size, 0))
        simplex = False
    c = A_S.T @ g_fixed / alpha

    w_coord = weights[part.labels]
    if p == 1:
        smooth = xs != 0
        c = c + np.where(smooth, w_coord * np.sign(xs), 0.0)
        box_idx = np.flatnonzero(~smooth)
        box_hw = w_coord[box_idx]
    else:
        norms = part.norms(xs, p)[part.labels]
        c = c + w_coord * np.sign(xs) * (np.abs(xs) / norms) ** (p - 1.0)
        box_idx = np.zeros(0, dtype=np.intp)
        box_hw = np.zeros(0)

    if B.shape[1] == 0 and box_idx.size:
        u = c.copy()
        u[box_idx] = soft_threshold(c[box_idx], box_hw)
    else:
        u = _least_norm_with_ties(c, B, box_idx, box_hw, simplex)
    return float(np.linalg.norm(u))


def smooth_gradient(problem: ProblemSpec, x: GroupedVector, zero_tol: float = 0.0) -> np.ndarray:
    """Gradient of the objective on the coordinates of nonzero groups (``p > 1``, ``r > 1``)."""
    if problem.p <= 1 or problem.r is INF or problem.r <= 1:
        raise ValueError("smooth_gradient needs p > 1 and finite r > 1")
    S = group_support(x, zero_tol)
    part = problem.partition.restrict(S)
    cols = problem.partition.coordinates(S)
    if part is None:
        return np.zeros(0)
    xs = x.values[cols]
    norms = part.norms(xs, problem.p)
    w = np.atleast_1d(phi_prime(norms, problem.q))[part.labels]
    zeta = w * np.sign(xs) * (np.abs(xs) / norms[part.labels]) ** (problem.p - 1.0)
    res = problem.A @ x.values - problem.y
    g, _ = residual_selection(res, problem.r)
    return zeta + problem.A[:, cols].T @ g / problem.alpha
