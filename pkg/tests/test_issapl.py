import numpy as np
import pytest

from grouplpq.datagen import GenSpec, gen_problem
from grouplpq.issapl import SolverConfig, initialize, outer_step, solve
from grouplpq.model import GroupPartition, objective


def test_initialize():
    part = GroupPartition.uniform(4, 1)
    st = initialize(SolverConfig(init="ones"), part)
    assert st.x.values.tolist() == [1, 1, 1, 1] and len(st.support) == 4
    g1 = initialize(SolverConfig(init="gaussian", init_seed=7), GroupPartition.uniform(64, 8))
    g2 = initialize(SolverConfig(init="gaussian", init_seed=7), GroupPartition.uniform(64, 8))
    assert np.array_equal(g1.x.values, g2.x.values) and len(g1.support) == 8


def test_config_validation():
    for bad in ({"epsilon": 1.0}, {"beta": 0.0}, {"outer_tol": 0.0}, {"init": "zeros"},
                {"init_scale": 0.0}):
        with pytest.raises(ValueError):
            SolverConfig(**bad)
    with pytest.raises(ValueError):
        SolverConfig.from_dict({"bogus": 1})
    cfg = SolverConfig.from_dict({"r": "inf", "beta": 1e-3})
    assert SolverConfig.from_dict(cfg.to_dict()) == cfg


def test_first_step_has_zero_beta(small_instance):
    prob, _ = small_instance
    cfg = SolverConfig()
    st = initialize(cfg, prob.partition)
    st, rec = outer_step(st, prob, cfg)
    assert rec.beta == 0.0 and st.beta == cfg.beta
    _, rec2 = outer_step(st, prob, cfg)
    assert rec2.beta == cfg.beta


def test_zero_data_collapses():
    prob, _ = gen_problem(GenSpec(M=16, N=32, n=4, s=2, sigma=0.0, seed=1), 0.1)
    prob.y = np.zeros_like(prob.y)
    x, rec = solve(prob)
    assert not x.values.any() and rec.converged


def test_noiseless_support_recovery():
    prob, x_or = gen_problem(GenSpec(M=32, N=64, n=4, s=2, sigma=0.0, seed=3), alpha=1e-6)
    x, rec = solve(prob, SolverConfig(eps_abs=1e-6, eps_rel=1e-6, outer_tol=1e-6, max_inner=5000))
    true = set(np.flatnonzero(x_or.norms(2)))
    sizes = [e.support_size for e in rec.entries]
    assert sizes == sorted(sizes, reverse=True)
    assert set(np.flatnonzero(x.norms(2))) == true
    assert np.linalg.norm(x.values - x_or.values) < 1e-4 * np.linalg.norm(x_or.values)


def test_record_invariants(small_instance):
    prob, _ = small_instance
    cfg = SolverConfig()
    x, rec = solve(prob, cfg)
    E = rec.objectives
    assert E[-1] == pytest.approx(objective(prob, x))
    for e, prev in zip(rec.entries, E[:-1]):
        assert e.objective + 0.5 * e.beta * (1 - cfg.epsilon) * e.step_norm**2 <= prev + 1e-8 * (1 + abs(prev))
        assert e.factorizations == 1 or e.support_size == 0
        assert e.inner_iterations <= cfg.max_inner
    if rec.converged:
        assert rec.entries[-1].relative_step <= cfg.outer_tol
    d = rec.to_dict()
    assert d["outer_iterations"] == len(rec.entries)


def test_overrides_apply(small_instance):
    prob, _ = small_instance
    cfg = SolverConfig(q=0.3, p=1.0, r=1)
    changed = cfg.apply(prob)
    assert (changed.p, changed.q, changed.r) == (1.0, 0.3, 1.0)
    assert SolverConfig().apply(prob) is prob


def test_safeguard_off_still_runs(small_instance):
    prob, _ = small_instance
    x, rec = solve(prob, SolverConfig(safeguard=False, max_outer=5))
    assert all(e.accepted for e in rec.entries)
    assert np.isfinite(objective(prob, x))
