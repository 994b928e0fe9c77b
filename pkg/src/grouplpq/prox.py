"""Proximal maps used by the z- and s-updates of the inner ADMM.

All operators take the penalty ``rho`` of the quadratic coupling term, i.e.
they return ``argmin_z h(z) + (rho/2) ||z - v||^2`` for the named ``h``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

MAX_NEWTON_ITER = 100


class ProxConvergenceError(RuntimeError):
    pass


@dataclass
class LinfProxResult:
    t_star: float
    i_star: int
    """Number of sorted magnitudes kept unclamped; ``-1`` when ``s = 0``."""
    s: np.ndarray


def soft_threshold(v, thresh):
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def prox_weighted_l1(v, weight, rho):
    """``sgn(v) max(|v| - weight/rho, 0)``, elementwise; ``weight`` may be an array."""
    if np.any(np.asarray(rho) <= 0):
        raise ValueError("rho must be positive")
    return soft_threshold(np.asarray(v, dtype=float), np.asarray(weight, dtype=float) / rho)


def prox_weighted_group_l2(v, weight, rho):
    if rho <= 0:
        raise ValueError("rho must be positive")
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return np.zeros_like(v)
    return max(nrm - weight / rho, 0.0) / nrm * v


def group_l2_shrink(v, weights, rho, partition):
    """Vectorised group shrinkage over all groups of ``partition`` at once."""
    norms = partition.norms(v, 2)
    safe = np.where(norms > 0, norms, 1.0)
    factor = np.maximum(norms - weights / rho, 0.0) / safe
    return v * factor[partition.labels]


def _solve_monotone(a, c, expo, tol=1e-14):
    """Roots of ``z + c z**expo = a`` on ``[0, a]`` for arrays ``a >= 0``.

    The left side is increasing in ``z`` for ``expo > 0``. Safeguarded
    Newton; steps leaving the bracket fall back to bisection. For
    ``expo < 1`` and a dominant power term the root is tiny and the left side
    steep there, so the equation is solved for ``u = z**expo`` instead; it
    has the same form with exponent ``1/expo``.
    """
    shape = np.shape(a)
    a = np.asarray(a, dtype=float).ravel()
    c = np.broadcast_to(np.asarray(c, dtype=float), shape).ravel()
    if expo < 1.0:
        with np.errstate(divide="ignore", over="ignore"):
            steep = (a > 0) & (c > 1e-300) & (c * a ** (expo - 1.0) > 1.0)
        if steep.any():
            out = np.empty_like(a)
            rest = ~steep
            if rest.any():
                out[rest] = _solve_monotone(a[rest], c[rest], expo, tol)
            u = _solve_monotone(a[steep] / c[steep], 1.0 / c[steep], 1.0 / expo, tol)
            out[steep] = u ** (1.0 / expo)
            return out.reshape(shape)
    lo = np.zeros_like(a)
    hi = a.copy()
    # start inside the bracket on the side where the function is positive
    z = a / (1.0 + c * np.where(a > 0, a, 1.0) ** (expo - 1.0))
    z = np.clip(z, lo, hi)
    scale = np.maximum(a, 1e-300)
    for _ in range(MAX_NEWTON_ITER):
        zp = np.where(z > 0, z, 0.0)
        f = z + c * zp**expo - a
        done = (np.abs(f) <= tol * scale) | (hi - lo <= tol * scale)
        if done.all():
            return z.reshape(shape)
        pos = f > 0
        hi = np.where(pos, z, hi)
        lo = np.where(pos, lo, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            df = 1.0 + c * expo * np.where(zp > 0, zp ** (expo - 1.0), np.inf if expo < 1 else 0.0)
            step = z - f / df
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        z = np.where(done, z, np.where(bad, 0.5 * (lo + hi), step))
    raise ProxConvergenceError(f"scalar Newton did not converge in {MAX_NEWTON_ITER} iterations")


def prox_weighted_group_lp(v, weight, rho, p):
    """Minimiser of ``weight ||z||_p + (rho/2) ||z - v||^2`` for ``p > 1``.

    Zero iff the dual norm of ``rho v`` is at most ``weight``. Otherwise the
    optimality system reduces, with ``c = weight / (rho ||z||_p^(p-1))``, to
    the coordinatewise equations ``z_j + c z_j^(p-1) = |v_j|``; ``c`` is
    located by a bracketed root search on ``c ||z(c)||_p^(p-1) = weight/rho``.
    """
    if p <= 1:
        raise ValueError("use prox_weighted_l1 for p = 1")
    if rho <= 0:
        raise ValueError("rho must be positive")
    v = np.asarray(v, dtype=float)
    if p == 2:
        return prox_weighted_group_l2(v, weight, rho)
    a = np.abs(v)
    if weight == 0 or not a.any():
        return v.copy() if weight == 0 else np.zeros_like(v)
    tau = weight / rho
    p_dual = p / (p - 1.0)
    if np.linalg.norm(a, ord=p_dual) <= tau:
        return np.zeros_like(v)

    def z_of(log_c):
        return _solve_monotone(a, np.exp(log_c), p - 1.0)

    def h(log_c):
        z = z_of(log_c)
        nz = np.linalg.norm(z, ord=p)
        return np.exp(log_c) * nz ** (p - 1.0) - tau

    # h increases from -tau (c -> 0) to ||a||_{p*} - tau > 0 (c -> inf)
    lo, hi = -1.0, 1.0
    for _ in range(400):
        if h(lo) < 0:
            break
        lo -= 2.0
    for _ in range(400):
        if h(hi) > 0:
            break
        hi += 2.0
    log_c = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    z = z_of(log_c)
    grad = _lp_norm_grad(z, p) * weight + rho * (z - a)
    if np.linalg.norm(grad) > 1e-10 * max(1.0, rho * np.linalg.norm(a)):
        raise ProxConvergenceError(f"group l{p} prox stalled, gradient norm {np.linalg.norm(grad):.3e}")
    return np.sign(v) * z


def _lp_norm_grad(z, p):
    nz = np.linalg.norm(z, ord=p)
    if nz == 0:
        return np.zeros_like(z)
    return np.sign(z) * (np.abs(z) / nz) ** (p - 1.0)


def prox_fidelity_r2(v, alpha, rho1):
    """Minimiser of ``(1/(2 alpha)) s^2 + (rho1/2)(s - v)^2``, elementwise."""
    if alpha <= 0 or rho1 <= 0:
        raise ValueError("alpha and rho1 must be positive")
    k = alpha * rho1
    return k / (1.0 + k) * np.asarray(v, dtype=float)


def prox_fidelity_r1(v, alpha, rho1):
    return prox_weighted_l1(v, 1.0 / alpha, rho1)


def prox_fidelity_r_general(v, alpha, rho1, r):
    """Minimiser of ``(1/(r alpha)) |s|^r + (rho1/2)(s - v)^2``, elementwise, ``r > 1``.

    Solves ``s + |s|^(r-1) / (alpha rho1) = |v|`` on ``[0, |v|]`` and restores the sign.
    """
    if r <= 1:
        raise ValueError("r must exceed 1")
    if alpha <= 0 or rho1 <= 0:
        raise ValueError("alpha and rho1 must be positive")
    v = np.asarray(v, dtype=float)
    if r == 2:
        return prox_fidelity_r2(v, alpha, rho1)
    s = _solve_monotone(np.abs(v), 1.0 / (alpha * rho1), r - 1.0)
    return np.sign(v) * s


def prox_linf(v, beta) -> LinfProxResult:
    """Minimiser of ``||s||_inf + beta ||s - v||^2`` in closed form.

    With the magnitudes sorted ascending (and a leading zero), the optimal
    level is ``t_i = (sum_{j>i} |v~_j| - 1/(2 beta)) / (n - i)`` for the
    unique ``i`` whose interval ``[|v~_i|, |v~_{i+1}|]`` contains ``t_i``.
    Entries with ``|v_j| <= t`` pass through, the rest are clamped to ``t``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    v = np.asarray(v, dtype=float)
    n = v.size
    mag = np.abs(v)
    total = mag.sum()
    if n == 0 or 1.0 - 2.0 * beta * total >= 0.0:
        return LinfProxResult(0.0, -1, np.zeros_like(v))

    srt = np.concatenate(([0.0], np.sort(mag, kind="stable")))  # srt[i] = |v~_i|, srt[0] = 0
    tail = total - np.concatenate(([0.0], np.cumsum(srt[1:])))[:n]  # sum_{j>i} |v~_j|, i = 0..n-1
    counts = n - np.arange(n)
    t = (tail - 1.0 / (2.0 * beta)) / counts
    # derivative of f at the left breakpoint of each interval; f' is increasing
    slope_left = 1.0 + 2.0 * beta * (counts * srt[:n] - tail)
    i_star = int(np.flatnonzero(slope_left < 0.0)[-1])
    lo, hi = srt[i_star], srt[i_star + 1]
    t_star = float(t[i_star])
    span = max(hi, 1.0) * 1e-12
    if not (lo - span <= t_star <= hi + span):
        raise AssertionError(f"linf prox: t={t_star} outside [{lo}, {hi}]")
    t_star = min(max(t_star, lo), hi)
    s = np.where(mag <= t_star, v, np.sign(v) * t_star)
    return LinfProxResult(t_star, i_star, s)


def prox_fidelity_linf(v, alpha, rho1):
    """s-update for the max-norm fidelity: ``(1/alpha)||s||_inf + (rho1/2)||s - v||^2``."""
    return prox_linf(v, alpha * rho1 / 2.0).s


def linf_level_objective(t, v, beta):
    """``f(t) = t + beta * sum_{|v_j| > t} (|v_j| - t)^2``; the 1-D reduction of the l-inf prox."""
    mag = np.abs(np.asarray(v, dtype=float))
    excess = np.maximum(mag - t, 0.0)
    return t + beta * float(excess @ excess)
