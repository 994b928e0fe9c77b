"""Scaled ADMM for the weighted convex subproblem on a fixed group support.

Solves::

    min_x  sum_i w_i ||x_i||_p + f_r(A_S x - y) + (beta/2) ||x - x_prev||^2

through the splitting ``z = x``, ``s = A_S x - y`` with scaled multipliers
``lam`` (for the ``s`` constraint) and ``mu`` (for the ``z`` constraint).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import prox
from .model import INF, GroupPartition, ProblemSpec, SupportSet, fidelity_from_residual


class SpdSystem:
    """Cached Cholesky solve with ``rho1 A^T A + c I``.

    When ``A`` has more columns than rows the ``M x M`` matrix
    ``c I + rho1 A A^T`` is factored instead (matrix inversion lemma).
    """

    def __init__(self, A, rho1, c):
        self.A = A
        self.rho1 = rho1
        self.c = c
        m, n = A.shape
        self.dual_form = n > m
        if self.dual_form:
            K = rho1 * (A @ A.T)
            K[np.diag_indices(m)] += c
        else:
            K = rho1 * (A.T @ A)
            K[np.diag_indices(n)] += c
        self.factor = cho_factor(K, lower=True, check_finite=False)

    def solve(self, rhs):
        if self.dual_form:
            t = cho_solve(self.factor, self.A @ rhs, check_finite=False)
            return (rhs - self.rho1 * (self.A.T @ t)) / self.c
        return cho_solve(self.factor, rhs, check_finite=False)

    def matrix(self):
        n = self.A.shape[1]
        return self.rho1 * (self.A.T @ self.A) + self.c * np.eye(n)


@dataclass
class AdmmReport:
    iterations: int
    primal_residual: float
    dual_residual: float
    dual_residual_adjoint: float
    eps_primal: float
    eps_dual: float
    converged: bool

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class AdmmState:
    support: SupportSet
    partition: GroupPartition | None
    A_S: np.ndarray
    weights: np.ndarray
    beta: float
    x_prev: np.ndarray
    x_bar: np.ndarray
    z: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    rho1: float
    rho2: float
    system: SpdSystem | None
    Ax: np.ndarray = field(repr=False, default=None)
    iterations: int = 0
    n_factorizations: int = 0

    @property
    def empty(self) -> bool:
        return self.x_bar.size == 0


def admm_setup(problem: ProblemSpec, S, weights, beta, x_prev, rho1=1.0, rho2=1.0) -> AdmmState:
    """Build ``A_S``, factor the x-update system and initialise at ``x_prev``.

    ``x_prev`` is the full-length outer iterate; ``weights`` are per group of ``S``.
    """
    if rho1 <= 0 or rho2 <= 0:
        raise ValueError("penalties must be positive")
    S = SupportSet(tuple(S))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(S),) or np.any(weights < 0):
        raise ValueError("need one nonnegative weight per support group")
    cols = problem.partition.coordinates(S)
    A_S = problem.A[:, cols]
    xp = np.asarray(getattr(x_prev, "values", x_prev), dtype=float)[cols]
    x_bar = xp.copy()
    Ax = A_S @ x_bar
    system = None
    n_fact = 0
    if cols.size:
        system = SpdSystem(A_S, rho1, rho2 + beta)
        n_fact = 1
    return AdmmState(
        support=S,
        partition=problem.partition.restrict(S),
        A_S=A_S,
        weights=weights,
        beta=float(beta),
        x_prev=xp,
        x_bar=x_bar,
        z=x_bar.copy(),
        s=Ax - problem.y,
        lam=np.zeros(problem.y.size),
        mu=np.zeros(cols.size),
        rho1=float(rho1),
        rho2=float(rho2),
        system=system,
        Ax=Ax,
        n_factorizations=n_fact,
    )


def z_update(v, weights, rho, partition: GroupPartition, p):
    if p == 1:
        return prox.prox_weighted_l1(v, weights[partition.labels], rho)
    if p == 2:
        return prox.group_l2_shrink(v, weights, rho, partition)
    out = np.empty_like(v)
    for i in range(partition.n_groups):
        sl = partition.group_slice(i)
        out[sl] = prox.prox_weighted_group_lp(v[sl], weights[i], rho, p)
    return out


def s_update(v, alpha, rho1, r):
    if r is INF:
        return prox.prox_fidelity_linf(v, alpha, rho1)
    if r == 1:
        return prox.prox_fidelity_r1(v, alpha, rho1)
    if r == 2:
        return prox.prox_fidelity_r2(v, alpha, rho1)
    return prox.prox_fidelity_r_general(v, alpha, rho1, r)


def admm_step(state: AdmmState, problem: ProblemSpec) -> AdmmState:
    """One sweep: joint (z, s) prox, x-update by the cached factor, multiplier ascent."""
    if state.empty:
        return state
    y = problem.y
    state.z = z_update(state.x_bar + state.mu, state.weights, state.rho2, state.partition, problem.p)
    state.s = s_update(state.Ax - y + state.lam, problem.alpha, state.rho1, problem.r)
    rhs = (state.rho1 * (state.A_S.T @ (y + state.s - state.lam))
           + state.rho2 * (state.z - state.mu)
           + state.beta * state.x_prev)
    state.x_bar = state.system.solve(rhs)
    state.Ax = state.A_S @ state.x_bar
    state.lam = state.lam + state.Ax - y - state.s
    state.mu = state.mu + state.x_bar - state.z
    state.iterations += 1
    return state


def admm_solve(state: AdmmState, problem: ProblemSpec, eps_abs=1e-3, eps_rel=1e-3, max_iter=1000):
    """Iterate until both stacked residual tests hold or ``max_iter`` sweeps.

    Returns the ``z`` block, which carries exact group zeros from the
    shrinkage, together with an :class:`AdmmReport`. The state keeps its
    multipliers, so calling again resumes from where it stopped.
    """
    if state.empty:
        return state.z.copy(), AdmmReport(0, 0.0, 0.0, 0.0, 0.0, 0.0, True)
    y = problem.y
    M, n = y.size, state.x_bar.size
    root_m = np.sqrt(M + n)
    root_n = np.sqrt(n)
    ynorm = np.linalg.norm(y)
    rho1, rho2 = state.rho1, state.rho2
    if max_iter < 1:
        return state.z.copy(), AdmmReport(0, np.inf, np.inf, np.inf, 0.0, 0.0, False)
    for it in range(1, max_iter + 1):
        x_old, Ax_old = state.x_bar, state.Ax
        admm_step(state, problem)
        r1 = state.Ax - y - state.s
        r2 = state.x_bar - state.z
        primal = np.sqrt(r1 @ r1 + r2 @ r2)
        dx = state.x_bar - x_old
        dAx = state.Ax - Ax_old
        dual = np.sqrt(rho1**2 * (dAx @ dAx) + rho2**2 * (dx @ dx))
        scale_pri = max(np.sqrt(state.Ax @ state.Ax + state.x_bar @ state.x_bar),
                        ynorm,
                        np.sqrt(state.s @ state.s + state.z @ state.z))
        eps_pri = root_m * eps_abs + eps_rel * scale_pri
        eps_dual = root_n * eps_abs + eps_rel * np.sqrt(rho1**2 * (state.lam @ state.lam)
                                                        + rho2**2 * (state.mu @ state.mu))
        if primal <= eps_pri and dual <= eps_dual:
            report = AdmmReport(it, float(primal), float(dual), _adjoint_dual(state, dx, dAx),
                                float(eps_pri), float(eps_dual), True)
            break
    else:
        report = AdmmReport(max_iter, float(primal), float(dual), _adjoint_dual(state, dx, dAx),
                            float(eps_pri), float(eps_dual), False)
    return state.z.copy(), report


def _adjoint_dual(state, dx, dAx):
    """Textbook dual residual ``||rho1 A^T A dx + rho2 dx||`` for diagnosis."""
    return float(np.linalg.norm(state.rho1 * (state.A_S.T @ dAx) + state.rho2 * dx))


def subproblem_objective(problem: ProblemSpec, state: AdmmState, x_S) -> float:
    """Convex surrogate value (up to a constant) at ``x_S`` on the support."""
    if state.empty:
        return fidelity_from_residual(-problem.y, problem.alpha, problem.r)
    norms = state.partition.norms(x_S, problem.p)
    d = x_S - state.x_prev
    res = state.A_S @ x_S - problem.y
    return float(state.weights @ norms + fidelity_from_residual(res, problem.alpha, problem.r)
                 + 0.5 * state.beta * (d @ d))
