import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from grouplpq import oracle, prox
from grouplpq.admm import admm_setup, admm_solve
from grouplpq.model import GroupPartition, ProblemSpec, SupportSet


def test_grid_examples():
    assert oracle.grid_prox_1d(lambda t: (t - 1) ** 2, 0, 3) == pytest.approx(1, abs=1e-9)
    f = lambda t: t + np.maximum(3 - t, 0) ** 2 + np.maximum(2 - t, 0) ** 2 + np.maximum(1 - t, 0) ** 2
    # f - f* ~ (t - 2.5)^2 vanishes below rounding of f at ~1.5e-8 from the optimum
    assert oracle.grid_prox_1d(f, 0, 3) == pytest.approx(2.5, abs=1e-7)
    assert oracle.grid_prox_1d(lambda t: t, 0, 3) == 0


def test_projected_gradient_examples():
    v = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(oracle.projected_gradient_prox(0.0, 1.0, 2, v), v)
    np.testing.assert_allclose(oracle.projected_gradient_prox(1.1, 0.8, 2, v),
                               prox.prox_weighted_group_l2(v, 1.1, 0.8), atol=1e-6)
    np.testing.assert_allclose(oracle.projected_gradient_prox(1.1, 0.8, 1, v),
                               prox.prox_weighted_l1(v, 1.1, 0.8), atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-10, 10)),
       st.one_of(st.just(0.0), st.floats(1e-6, 5.0)), st.floats(0.1, 5.0), st.floats(1.1, 4.0))
def test_dual_oracle_matches_prox(v, weight, rho, p):
    got = prox.prox_weighted_group_lp(v, weight, rho, p)
    ref = oracle.dual_projection_prox(weight, rho, p, v)
    np.testing.assert_allclose(got, ref, atol=1e-7)


def test_dense_solve_scalar_case():
    # one variable: w |x| sign term plus (1/(2a))(x - y)^2 + (b/2)(x - x0)^2 has a closed root for x > 0
    part = GroupPartition((1,))
    w, a, b, y, x0 = 0.3, 0.5, 0.2, 2.0, 1.0
    x = oracle.dense_smooth_solve(np.ones((1, 1)), np.array([y]), a, 2.0, 2.0, part, [w], b, np.array([x0]))
    assert x[0] == pytest.approx((y / a + b * x0 - w) / (1 / a + b), rel=1e-12)


def test_dense_solve_zero_weights_is_ridge():
    rng = np.random.default_rng(2)
    A, y, x0 = rng.standard_normal((6, 4)), rng.standard_normal(6), rng.standard_normal(4)
    part = GroupPartition.uniform(4, 2)
    x = oracle.dense_smooth_solve(A, y, 0.5, 2.0, 2.0, part, [0.0, 0.0], 0.1, x0)
    ridge = np.linalg.solve(A.T @ A / 0.5 + 0.1 * np.eye(4), A.T @ y / 0.5 + 0.1 * x0)
    np.testing.assert_allclose(x, ridge, rtol=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_dense_solve_matches_admm(seed):
    rng = np.random.default_rng(seed)
    part = GroupPartition.uniform(32, 4)
    A = rng.standard_normal((16, 32))
    y = rng.standard_normal(16)
    prob = ProblemSpec(A, y, 0.5, 2, 0.5, 2, part)
    S = SupportSet.full(8)
    x_prev = rng.standard_normal(32)
    w = 0.05 * np.ones(8)
    ref = oracle.dense_smooth_solve(A, y, 0.5, 2.0, 2.0, part, w, 0.5, x_prev)
    state = admm_setup(prob, S, w, 0.5, x_prev)
    z, rep = admm_solve(state, prob, 1e-10, 1e-10, 20000)
    assert rep.converged
    assert np.linalg.norm(z - ref) <= 1e-4 * np.linalg.norm(ref)


def test_dense_solve_rejects_nonsmooth():
    with pytest.raises(ValueError):
        oracle.dense_smooth_solve(np.eye(2), np.ones(2), 1.0, 1.0, 2.0, GroupPartition((2,)), [1.0], 0.1, np.ones(2))
