import numpy as np
import pytest

from grouplpq import oracle
from grouplpq.admm import SpdSystem, admm_setup, admm_solve, admm_step, subproblem_objective
from grouplpq.datagen import gen_matrix
from grouplpq.model import INF, GroupPartition, ProblemSpec, SupportSet


def make(seed, M=8, N=16, n=4, r=2, alpha=0.5, y_zero=False):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((M, N))
    y = np.zeros(M) if y_zero else rng.standard_normal(M)
    return ProblemSpec(A, y, alpha, 2, 0.5, r, GroupPartition.uniform(N, n))


def test_empty_support():
    prob = make(0)
    state = admm_setup(prob, SupportSet(()), np.zeros(0), 0.1, np.zeros(16))
    assert state.empty and state.n_factorizations == 0
    z, rep = admm_solve(state, prob)
    assert z.size == 0 and rep.converged and rep.iterations == 0


def test_system_matrix_is_spd():
    A = gen_matrix(6, 12, seed=1)
    part = GroupPartition.uniform(12, 3)
    prob = ProblemSpec(A, np.ones(6), 1.0, 2, 0.5, 2, part)
    state = admm_setup(prob, SupportSet.full(4), np.ones(4), 0.0, np.ones(12))
    K = state.system.matrix()
    np.testing.assert_allclose(K, A.T @ A + np.eye(12), atol=1e-12)
    assert np.linalg.eigvalsh(K).min() > 0


@pytest.mark.parametrize("M,n_cols", [(10, 4), (4, 10)])
def test_spd_solve_both_forms(M, n_cols):
    rng = np.random.default_rng(M)
    A = rng.standard_normal((M, n_cols))
    sys = SpdSystem(A, 2.0, 0.3)
    rhs = rng.standard_normal(n_cols)
    np.testing.assert_allclose(sys.matrix() @ sys.solve(rhs), rhs, atol=1e-10)


def test_scalar_problem_converges_to_closed_form():
    # min w|x| + (1/(2a))(x - y)^2 + (b/2)(x - x0)^2 with x > 0 at the optimum
    part = GroupPartition((1,))
    w, a, b, y, x0 = 0.3, 0.5, 0.2, 2.0, 1.0
    prob = ProblemSpec(np.ones((1, 1)), np.array([y]), a, 2, 0.5, 2, part)
    state = admm_setup(prob, SupportSet((0,)), [w], b, np.array([x0]))
    exact = (y / a + b * x0 - w) / (1 / a + b)
    for _ in range(200):
        admm_step(state, prob)
        if abs(state.z[0] - exact) < 1e-6:
            break
    assert abs(state.z[0] - exact) < 1e-6
    assert state.n_factorizations == 1


def test_zero_data_gives_zero():
    prob = make(2, y_zero=True)
    state = admm_setup(prob, SupportSet.full(4), np.full(4, 0.5), 0.1, np.ones(16))
    z, rep = admm_solve(state, prob, 1e-8, 1e-8, 5000)
    assert rep.converged and np.linalg.norm(z) < 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_matches_dense_solve(seed):
    prob = make(seed, M=16, N=32)
    x_prev = np.random.default_rng(seed).standard_normal(32)
    w = np.full(8, 0.02)
    ref = oracle.dense_smooth_solve(prob.A, prob.y, prob.alpha, 2.0, 2.0, prob.partition, w, 0.3, x_prev)
    state = admm_setup(prob, SupportSet.full(8), w, 0.3, x_prev)
    z, rep = admm_solve(state, prob, 1e-9, 1e-9, 20000)
    assert rep.converged and state.n_factorizations == 1
    assert np.linalg.norm(z - ref) <= 1e-4 * np.linalg.norm(ref)


def test_linf_against_level_grid():
    # min over s with ||s||_inf = t of the remaining smooth problem, scanned over t
    prob = make(5, M=8, N=8, n=2, r=INF, alpha=1.0)
    w = np.full(4, 0.05)
    x_prev = np.zeros(8)
    beta = 0.5
    state = admm_setup(prob, SupportSet.full(4), w, beta, x_prev)
    z, rep = admm_solve(state, prob, 1e-9, 1e-9, 50000)
    got = subproblem_objective(prob, state, z)

    from scipy.optimize import minimize

    def inner(t):
        # smooth surrogate under the box |Ax - y| <= t, solved exactly by SLSQP
        cons = [{"type": "ineq", "fun": lambda x: t - (prob.A @ x - prob.y)},
                {"type": "ineq", "fun": lambda x: t + (prob.A @ x - prob.y)}]
        f = lambda x: (w @ prob.partition.norms(x, 2) + 0.5 * beta * x @ x)
        res = minimize(f, np.linalg.lstsq(prob.A, prob.y, rcond=None)[0], constraints=cons,
                       method="SLSQP", options={"ftol": 1e-12, "maxiter": 500})
        return res.fun + t / prob.alpha

    top = float(np.max(np.abs(prob.y)))
    ts = np.linspace(0.0, top, 41)
    vals = [inner(t) for t in ts]
    k = int(np.argmin(vals))
    from scipy.optimize import minimize_scalar
    best = minimize_scalar(inner, bounds=(ts[max(k - 1, 0)], ts[min(k + 1, 40)]), method="bounded",
                           options={"xatol": 1e-8}).fun
    assert got <= best + 1e-4


def test_resume_keeps_multipliers():
    prob = make(3, M=16, N=32)
    state = admm_setup(prob, SupportSet.full(8), np.full(8, 0.02), 0.3, np.ones(32))
    _, first = admm_solve(state, prob, 1e-3, 1e-3, 1000)
    it = state.iterations
    _, second = admm_solve(state, prob, 1e-6, 1e-6, 1000)
    assert state.iterations > it and second.primal_residual <= first.primal_residual
    assert state.n_factorizations == 1


def test_setup_validation():
    prob = make(0)
    with pytest.raises(ValueError):
        admm_setup(prob, SupportSet((0,)), [1.0, 2.0], 0.1, np.zeros(16))
    with pytest.raises(ValueError):
        admm_setup(prob, SupportSet((0,)), [1.0], 0.1, np.zeros(16), rho1=0.0)
