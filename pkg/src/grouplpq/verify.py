"""Randomised agreement checks between the closed-form proxes and the oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle, prox

TOLERANCE = 1e-6


@dataclass
class SuiteResult:
    name: str
    draws: int
    max_deviation: float
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.draws} draws, max deviation {self.max_deviation:.2e} (tol {self.tolerance:.0e})"


def _scalar_draw(rng):
    v = rng.normal(scale=3.0)
    weight = rng.uniform(0.0, 3.0)
    rho = rng.uniform(0.2, 5.0)
    return v, weight, rho


def check_weighted_l1(rng, draws):
    worst = 0.0
    for _ in range(draws):
        v, w, rho = _scalar_draw(rng)
        ref = oracle.grid_prox_1d(lambda z: w * np.abs(z) + 0.5 * rho * (z - v) ** 2, -abs(v) - 1, abs(v) + 1)
        worst = max(worst, abs(prox.prox_weighted_l1(v, w, rho) - ref))
    return SuiteResult("weighted l1", draws, worst)


def _vector_draw(rng):
    n = int(rng.integers(1, 9))
    return rng.normal(scale=2.0, size=n), rng.uniform(0.0, 4.0), rng.uniform(0.2, 5.0)


def check_group_lp(rng, draws, p):
    worst = 0.0
    for _ in range(draws):
        v, w, rho = _vector_draw(rng)
        if p == 2:
            got = prox.prox_weighted_group_l2(v, w, rho)
            ref = oracle.projected_gradient_prox(w, rho, p, v)
        else:
            # primal descent is ill conditioned when the minimiser is near 0
            got = prox.prox_weighted_group_lp(v, w, rho, p)
            ref = oracle.dual_projection_prox(w, rho, p, v)
        worst = max(worst, float(np.max(np.abs(got - ref))))
    label = "group l2" if p == 2 else f"group l{p:g}"
    return SuiteResult(label, draws, worst)


def check_fidelity(rng, draws, r):
    worst = 0.0
    for _ in range(draws):
        v = rng.normal(scale=3.0)
        alpha, rho1 = rng.uniform(0.1, 3.0), rng.uniform(0.2, 5.0)
        if r == 1:
            got = prox.prox_fidelity_r1(v, alpha, rho1)
        else:
            got = float(prox.prox_fidelity_r_general(np.array([v]), alpha, rho1, r)[0])

        def f(s):
            return np.abs(s) ** r / (r * alpha) + 0.5 * rho1 * (s - v) ** 2

        ref = oracle.grid_prox_1d(f, -abs(v) - 1, abs(v) + 1)
        worst = max(worst, abs(got - ref))
    return SuiteResult(f"fidelity r={r:g}", draws, worst)


def check_linf(rng, draws):
    """Level from a grid search on the 1-D reduction, output clamped at that level."""
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(1, 12))
        v = rng.normal(scale=2.0, size=n)
        beta = rng.uniform(0.05, 5.0)
        mag = np.abs(v)

        def f(t):
            t = np.atleast_1d(t)
            excess = np.maximum(mag[None, :] - t[:, None], 0.0)
            return t + beta * np.sum(excess**2, axis=1)

        t_ref = oracle.grid_prox_1d(f, 0.0, float(mag.max()))
        s_ref = np.sign(v) * np.minimum(mag, t_ref)
        got = prox.prox_linf(v, beta)
        worst = max(worst, abs(got.t_star - t_ref), float(np.max(np.abs(got.s - s_ref))))
    return SuiteResult("l-inf", draws, worst)


def run_all(draws: int = 1000, seed: int = 0) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    results = [check_weighted_l1(rng, draws)]
    results += [check_group_lp(rng, draws, p) for p in (2, 1.5, 3)]
    results += [check_fidelity(rng, draws, r) for r in (1, 1.5, 2, 4)]
    results.append(check_linf(rng, draws))
    return results
