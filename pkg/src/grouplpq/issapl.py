"""Outer loop: support shrinking with proximal linearisation and inexact inner solves.

Each outer step freezes the support of the current iterate, replaces every
``||x_i||_p^q`` by its tangent at the current group norm, adds a proximal
term ``(beta/2)||x - x^(l)||^2`` and solves the resulting weighted convex
problem on the support with scaled ADMM. Groups shrunk to zero leave the
support for good.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .admm import admm_setup, admm_solve
from .model import (
    ZERO_TOL,
    GroupedVector,
    GroupPartition,
    ProblemSpec,
    SupportSet,
    embed,
    format_r,
    group_support,
    objective,
    parse_r,
)
from .subdiff import inexactness_certificate, linearization_weights

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Knobs of the outer and inner loops.

    ``p``, ``q``, ``r`` override the problem's model parameters when set.
    ``init`` is ``"ones"`` (``x0 = init_scale * 1``) or ``"gaussian"``
    (seeded by ``init_seed``).
    """

    p: float | None = None
    q: float | None = None
    r: object = None
    beta: float = 1e-4
    epsilon: float = 0.9
    rho1: float = 1.0
    rho2: float = 1.0
    outer_tol: float = 1e-3
    max_outer: int = 100
    eps_abs: float = 1e-3
    eps_rel: float = 1e-3
    max_inner: int = 1000
    tighten_rounds: int = 3
    zero_tol: float = ZERO_TOL
    init: str = "ones"
    init_scale: float = 1.0
    init_seed: int = 0
    safeguard: bool = True

    def __post_init__(self):
        if self.r is not None:
            self.r = parse_r(self.r)
        if not 0 <= self.epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be positive")
        if self.init not in ("ones", "gaussian"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "ones" and self.init_scale == 0:
            raise ValueError("ones initialisation needs a nonzero scale")

    @classmethod
    def from_dict(cls, d) -> "SolverConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        d = dataclasses.asdict(self)
        if self.r is not None:
            d["r"] = format_r(self.r)
        return d

    def apply(self, problem: ProblemSpec) -> ProblemSpec:
        changes = {k: getattr(self, k) for k in ("p", "q", "r") if getattr(self, k) is not None}
        return dataclasses.replace(problem, **changes) if changes else problem


@dataclass
class IterateState:
    x: GroupedVector
    support: SupportSet
    weights: np.ndarray | None
    outer_iter: int
    beta: float


@dataclass
class OuterRecord:
    iteration: int
    objective: float
    support_size: int
    step_norm: float
    relative_step: float
    u_norm: float
    bound: float
    certified: bool
    accepted: bool
    min_group_norm: float
    inner_iterations: int
    tighten_rounds: int
    factorizations: int
    inner_converged: bool
    primal_residual: float
    dual_residual: float
    dual_residual_adjoint: float
    beta: float
    wall_time: float


@dataclass
class RunRecord:
    initial_objective: float
    entries: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0

    @property
    def objectives(self):
        return np.array([self.initial_objective] + [e.objective for e in self.entries])

    @property
    def outer_iterations(self) -> int:
        return len(self.entries)

    def to_dict(self):
        return {
            "initial_objective": self.initial_objective,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "outer_iterations": self.outer_iterations,
            "entries": [dataclasses.asdict(e) for e in self.entries],
        }


def initialize(config: SolverConfig, partition: GroupPartition) -> IterateState:
    if config.init == "ones":
        if config.init_scale == 0:
            raise ValueError("ones initialisation needs c != 0")
        x0 = np.full(partition.size, float(config.init_scale))
    else:
        x0 = np.random.default_rng(config.init_seed).standard_normal(partition.size)
    x = GroupedVector(x0, partition)
    return IterateState(x, group_support(x, 0.0), None, 0, 0.0)


def _sufficient_decrease_gap(E_new, E_old, beta, epsilon, step):
    return E_new + 0.5 * beta * (1.0 - epsilon) * step**2 - E_old


def outer_step(state: IterateState, problem: ProblemSpec, config: SolverConfig, E_old=None):
    """Advance one outer iteration; returns ``(next_state, OuterRecord)``.

    The proximal weight is zero on the very first step. When the inexactness
    certificate fails, ADMM is resumed with halved tolerances (at most
    ``config.tighten_rounds`` times, within ``config.max_inner`` sweeps in
    total). With ``config.safeguard`` a candidate that still violates the
    sufficient-decrease inequality is discarded and the iterate is kept.
    """
    t0 = time.perf_counter()
    S = state.support
    beta = 0.0 if state.outer_iter == 0 else config.beta
    x = state.x
    if E_old is None:
        E_old = objective(problem, x)
    weights = linearization_weights(x, S, problem.p, problem.q) if len(S) else np.zeros(0)
    current = IterateState(x, S, weights, state.outer_iter, beta)

    adm = admm_setup(problem, S, weights, beta, x, config.rho1, config.rho2)
    eps_abs, eps_rel = config.eps_abs, config.eps_rel
    z, report = admm_solve(adm, problem, eps_abs, eps_rel, config.max_inner)
    candidate = embed(z, problem.partition, S)
    cert = inexactness_certificate(problem, current, candidate, beta, config.epsilon)
    rounds = 0
    while not cert.satisfied and rounds < config.tighten_rounds and adm.iterations < config.max_inner:
        rounds += 1
        eps_abs, eps_rel = eps_abs / 2, eps_rel / 2
        z, report = admm_solve(adm, problem, eps_abs, eps_rel, config.max_inner - adm.iterations)
        candidate = embed(z, problem.partition, S)
        cert = inexactness_certificate(problem, current, candidate, beta, config.epsilon)

    step = float(np.linalg.norm(candidate.values - x.values))
    E_new = objective(problem, candidate)
    accepted = True
    if config.safeguard and _sufficient_decrease_gap(E_new, E_old, beta, config.epsilon, step) > 0:
        accepted = False
        log.debug("outer %d: candidate rejected (E %.6g -> %.6g)", state.outer_iter, E_old, E_new)
        candidate, E_new, step = x, E_old, 0.0

    new_support = group_support(candidate, config.zero_tol)
    if not new_support.issubset(S):
        raise AssertionError("support grew; embedding is broken")
    # drop sub-threshold groups so the next surrogate sees exact zeros
    values = candidate.values
    dropped = [i for i in S if i not in new_support]
    if dropped:
        values = values.copy()
        values[problem.partition.coordinates(dropped)] = 0.0
        E_new = objective(problem, GroupedVector(values, problem.partition))
    x_new = GroupedVector(values, problem.partition)
    xnorm = float(np.linalg.norm(x.values))
    norms = x_new.norms(problem.p)
    nz = norms[norms > 0]
    rec = OuterRecord(
        iteration=state.outer_iter,
        objective=E_new,
        support_size=len(new_support),
        step_norm=step,
        relative_step=step / xnorm if xnorm > 0 else 0.0,
        u_norm=cert.u_norm,
        bound=cert.bound,
        certified=bool(cert.satisfied),
        accepted=accepted,
        min_group_norm=float(nz.min()) if nz.size else 0.0,
        inner_iterations=adm.iterations,
        tighten_rounds=rounds,
        factorizations=adm.n_factorizations,
        inner_converged=report.converged,
        primal_residual=report.primal_residual,
        dual_residual=report.dual_residual,
        dual_residual_adjoint=report.dual_residual_adjoint,
        beta=beta,
        wall_time=time.perf_counter() - t0,
    )
    return IterateState(x_new, new_support, None, state.outer_iter + 1, config.beta), rec


def solve(problem: ProblemSpec, config: SolverConfig | None = None):
    """Run the outer loop to ``||x+ - x|| <= outer_tol ||x||`` or ``max_outer`` steps.

    Returns the final iterate and its :class:`RunRecord`.
    """
    config = config or SolverConfig()
    problem = config.apply(problem)
    t0 = time.perf_counter()
    state = initialize(config, problem.partition)
    E = objective(problem, state.x)
    record = RunRecord(initial_objective=E)
    for _ in range(config.max_outer):
        state, rec = outer_step(state, problem, config, E_old=E)
        E = rec.objective
        record.entries.append(rec)
        if rec.relative_step <= config.outer_tol or len(state.support) == 0:
            record.converged = True
            break
    record.wall_time = time.perf_counter() - t0
    return state.x, record
