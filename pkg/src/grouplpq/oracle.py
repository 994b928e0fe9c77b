"""Slow, independent reference computations.

Nothing in this module is used by the solver; tests and ``verify`` compare
the fast closed forms against these.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class OracleError(RuntimeError):
    pass


def _evaluate(f, grid):
    try:
        vals = np.asarray(f(grid), dtype=float)
        if vals.shape == grid.shape:
            return vals
    except Exception:
        pass
    return np.array([f(t) for t in grid], dtype=float)


def grid_prox_1d(f, lo, hi, resolution=None, width=1e-10):
    """Argmin of a scalar function on ``[lo, hi]``.

    Exhaustive grid at ``resolution`` (default: 2000 cells), then
    golden-section search on the two cells around the best grid point until
    the bracket is narrower than ``width``.
    """
    if lo > hi:
        raise ValueError("need lo <= hi")
    if lo == hi:
        return float(lo)
    if resolution is None:
        resolution = (hi - lo) / 2000.0
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    n = int(np.ceil((hi - lo) / resolution))
    grid = np.linspace(lo, hi, n + 1)
    k = int(np.argmin(_evaluate(f, grid)))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, n)]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best = [(f(a), a), (f(b), b), (f(0.5 * (a + b)), 0.5 * (a + b))]
    return float(min(best)[1])


def projected_gradient_prox(weight, rho, p, v, tol=1e-10, max_iter=200000, patience=100):
    """Minimise ``weight ||z||_p + (rho/2)||z - v||^2`` without any closed form.

    The minimiser shares the signs of ``v``, so the search runs over
    magnitudes ``m >= 0`` by projected gradient with Barzilai-Borwein steps
    and backtracking. Zero is returned when the optimality test
    ``||rho v||_{p*} <= weight`` holds.

    Stops when the projected gradient falls below ``tol`` (relative), or when
    the objective has not decreased for ``patience`` consecutive steps. The
    second exit exists because for ``p < 2`` the gradient of ``||.||_p``
    blows up next to a zero coordinate, so a tiny optimal entry caps the
    attainable stationarity near 1e-8 even though the iterate is accurate.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if weight == 0:
        return v.copy()
    dual = np.inf if p == 1 else p / (p - 1.0)
    if np.linalg.norm(rho * a, ord=dual) <= weight:
        return np.zeros_like(v)

    def fun(m):
        return weight * np.linalg.norm(m, ord=p) + 0.5 * rho * np.sum((m - a) ** 2)

    def grad(m):
        nm = np.linalg.norm(m, ord=p)
        if nm == 0:
            g_norm = np.zeros_like(m)
        elif p == 1:
            g_norm = np.ones_like(m)
        else:
            g_norm = (m / nm) ** (p - 1.0)
        return weight * g_norm + rho * (m - a)

    m = a.copy()
    g = grad(m)
    fm = fun(m)
    best, stale = fm, 0
    step = 1.0 / rho
    scale = max(1.0, rho * np.linalg.norm(a))
    for _ in range(max_iter):
        pg = m - np.maximum(m - g / rho, 0.0)
        if rho * np.linalg.norm(pg) <= tol * scale or stale >= patience:
            return np.sign(v) * m
        t = step
        while True:
            m_new = np.maximum(m - t * g, 0.0)
            d = m_new - m
            f_new = fun(m_new)
            if f_new <= fm + g @ d + (d @ d) / (2 * t) or t < 1e-18:
                break
            t *= 0.5
        g_new = grad(m_new)
        s_vec, y_vec = m_new - m, g_new - g
        sy = s_vec @ y_vec
        step = (s_vec @ s_vec) / sy if sy > 0 else 1.0 / rho
        m, g, fm = m_new, g_new, f_new
        if fm < best:
            best, stale = fm, 0
        else:
            stale += 1
    raise OracleError("projected gradient hit the iteration cap")


def _bisect_increasing(h, hi, iters=64):
    """Vectorised bisection for the root of an increasing ``h`` on ``[0, hi]``."""
    lo = np.zeros_like(hi)
    hi = hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = h(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return 0.5 * (lo + hi)


def dual_projection_prox(weight, rho, p, v):
    """Same minimiser as :func:`projected_gradient_prox`, via Moreau's identity.

    ``z = v - P(v)`` where ``P`` projects onto the dual-norm ball of radius
    ``weight / rho``. The projection's multiplier is found by Brent's method
    and each coordinate of ``P(v)`` by plain bisection. Unlike primal descent
    this stays well conditioned when the minimiser is close to zero.
    """
    if p <= 1:
        raise ValueError("dual_projection_prox needs p > 1")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if weight == 0:
        return v.copy()
    k = p / (p - 1.0)  # dual exponent
    radius = weight / rho
    if np.linalg.norm(a, ord=k) <= radius:
        return np.zeros_like(v)
    an = a / radius  # project onto the unit ball instead

    def project(lam):
        # u + lam k u^(k-1) = an, coordinatewise; overflow to inf only flags "too large"
        with np.errstate(over="ignore", invalid="ignore"):
            return _bisect_increasing(lambda u: u + lam * k * u ** (k - 1.0) - an, an)

    def excess(log_lam):
        with np.errstate(over="ignore"):
            return np.sum(project(np.exp(log_lam)) ** k) - 1.0

    lo, hi = -40.0, 0.0
    while excess(hi) > 0:
        hi += 5.0
        if hi > 200:
            raise OracleError("could not bracket the projection multiplier")
    log_lam = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
    return np.sign(v) * (an - project(np.exp(log_lam))) * radius


def _norm_grad_hess(x, p):
    nu = np.linalg.norm(x, ord=p)
    ax = np.abs(x)
    g = np.sign(x) * (ax / nu) ** (p - 1.0)
    with np.errstate(divide="ignore"):
        diag = (p - 1.0) * ax ** (p - 2.0) / nu ** (p - 1.0)
    H = np.diag(diag) - (p - 1.0) * np.outer(g, g) / nu
    return nu, g, H


def dense_smooth_solve(A_S, y, alpha, p, r, part, weights, beta, x_prev_S, tol=1e-10, max_iter=200):
    """Damped Newton on the smooth surrogate ``sum w_i||x_i||_p + (1/(r alpha))||A_S x - y||_r^r + (beta/2)||x - x_prev||^2``.

    Valid when no group of the minimiser vanishes and, for ``r < 2``, no
    residual does. ``part`` is the partition restricted to the support.
    """
    if p <= 1 or r <= 1:
        raise ValueError("dense_smooth_solve needs p > 1 and r > 1")
    weights = np.asarray(weights, dtype=float)

    def parts(x):
        res = A_S @ x - y
        val = np.sum(np.abs(res) ** r) / (r * alpha) + 0.5 * beta * np.sum((x - x_prev_S) ** 2)
        grad = A_S.T @ (np.abs(res) ** (r - 1.0) * np.sign(res)) / alpha + beta * (x - x_prev_S)
        H = (r - 1.0) / alpha * (A_S.T * np.abs(res) ** (r - 2.0)) @ A_S + beta * np.eye(x.size)
        for i in range(part.n_groups):
            sl = part.group_slice(i)
            nu, g, Hi = _norm_grad_hess(x[sl], p)
            val += weights[i] * nu
            grad[sl] += weights[i] * g
            H[sl, sl] += weights[i] * Hi
        return val, grad, H

    x = np.asarray(x_prev_S, dtype=float).copy()
    f, g, H = parts(x)
    scale = max(1.0, np.linalg.norm(g))
    for _ in range(max_iter):
        if np.linalg.norm(g) <= tol * scale:
            return x
        try:
            dx = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError as exc:
            raise OracleError("singular Newton system") from exc
        t = 1.0
        while t > 1e-12:
            x_new = x + t * dx
            f_new, g_new, H_new = parts(x_new)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * t * (g @ dx):
                break
            t *= 0.5
        else:
            # no decrease representable any more: at the floating-point floor
            return x
        x, f, g, H = x_new, f_new, g_new, H_new
    if np.linalg.norm(g) <= 1e3 * tol * scale:
        return x
    raise OracleError(f"Newton stalled with gradient norm {np.linalg.norm(g):.3e}")
