import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crnoma.zoa import (Candidate, ZoaConfig, defense_attack_step, defense_perturb_step, defense_update, draw_omega,
                        forage_step, forage_update, optimize, write_trace_csv)


def sphere(pop):
    return -(pop ** 2).sum(axis=1)


def test_forage_examples():
    x = np.array([0.3, 0.7])
    np.testing.assert_array_equal(forage_step(x, x, np.array([0.2, 0.9]), 1.0), x)
    best = np.array([0.5, 0.9])
    r = np.array([0.25, 0.75])
    np.testing.assert_allclose(forage_step(np.zeros(2), best, r, 2.0), r * best)
    assert forage_step(0.4, 0.8, 0.5, 1.0) == pytest.approx(0.6, abs=1e-15)


def test_defense_examples():
    x = np.array([0.2, 0.9])
    np.testing.assert_array_equal(defense_perturb_step(x, np.array([0.0, 1.0]), 100, 100, 0.1), x)
    assert defense_perturb_step(1.0, 1.0, 0, 100, 0.1) == pytest.approx(1.1, abs=1e-15)
    np.testing.assert_array_equal(defense_attack_step(x, x, np.array([0.3, 0.6]), 1.0), x)


def test_omega_modes():
    rng = np.random.default_rng(0)
    w = draw_omega(rng, 10_000, "random")
    assert set(np.unique(w)) == {1.0, 2.0} and abs(w.mean() - 1.5) < 0.02
    assert np.all(draw_omega(rng, 3, 2) == 2.0)


def test_update_wrappers_clamp():
    cfg = ZoaConfig(dimension=3, lower=0.0, upper=1.0)
    rng = np.random.default_rng(1)
    cand, best = Candidate(np.array([0.9, 1.0, 0.0])), Candidate(np.ones(3))
    for t in range(1, 50):
        for new in (forage_update(cand, best, rng, cfg), defense_update(cand, best, t, cfg, rng)):
            assert np.all((new.position >= 0) & (new.position <= 1))


@pytest.mark.parametrize("kwargs", [
    dict(population_size=1), dict(max_iterations=0), dict(lower=1.0, upper=1.0), dict(defense_R=0.0),
    dict(epsilon=0.0), dict(patience=0), dict(omega=3), dict(attacked="worst"),
])
def test_config_rejects(kwargs):
    with pytest.raises(ValueError):
        ZoaConfig(**kwargs)


def test_sphere_reaches_optimum():
    hits = 0
    for seed in range(100):
        res = optimize(sphere, ZoaConfig(dimension=4, lower=-5, upper=5, rng_seed=seed), vectorized=True)
        hits += res.best.fitness >= -0.01
    assert hits >= 95


def test_constant_objective_returns_member():
    cfg = ZoaConfig(population_size=2, max_iterations=1, dimension=3, rng_seed=4)
    pop0 = np.random.default_rng(4).random((2, 3))
    res = optimize(lambda x: 1.0, cfg)
    assert any(np.array_equal(res.best.position, row) for row in pop0)
    assert res.trace == [1.0, 1.0]


def test_constant_objective_stops_early():
    res = optimize(lambda x: 0.0, ZoaConfig(dimension=2, patience=2))
    assert res.stopped_early and res.iterations == 2


def test_scalar_and_vectorized_agree():
    cfg = ZoaConfig(dimension=3, lower=-2, upper=2, rng_seed=7, max_iterations=30)
    a = optimize(sphere, cfg, vectorized=True)
    b = optimize(lambda x: -(x ** 2).sum(), cfg)
    np.testing.assert_array_equal(a.best.position, b.best.position)
    assert a.trace == b.trace


def test_seeds_enter_population():
    cfg = ZoaConfig(dimension=2, max_iterations=1)
    res = optimize(lambda x: -abs(x - 0.37).sum(), cfg, initial=[[0.37, 0.37]])
    np.testing.assert_array_equal(res.best.position, [0.37, 0.37])


def test_trace_csv(tmp_path):
    write_trace_csv(tmp_path / "t.csv", [1.0, 2.5])
    assert (tmp_path / "t.csv").read_text() == "iteration,best_fitness\n0,1.0\n1,2.5\n"


@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6), attacked=st.sampled_from(["best", "random"]),
       omega=st.sampled_from(["random", 1, 2]))
def test_trace_monotone_bounded_deterministic(seed, dim, attacked, omega):
    lo, hi = -np.arange(1, dim + 1), np.arange(1, dim + 1) * 2.0
    seen = []

    def rastrigin(pop):
        assert np.all(pop >= lo) and np.all(pop <= hi)
        seen.append(pop.copy())
        return -(10 * dim + (pop ** 2 - 10 * np.cos(2 * np.pi * pop)).sum(axis=1))

    cfg = ZoaConfig(dimension=dim, lower=lo, upper=hi, rng_seed=seed, max_iterations=25, attacked=attacked,
                    omega=omega, patience=None)
    res = optimize(rastrigin, cfg, vectorized=True)
    assert np.all(np.diff(res.trace) >= 0)
    assert res.evaluations == cfg.population_size * (1 + 2 * res.iterations)
    again = optimize(rastrigin, cfg, vectorized=True)
    np.testing.assert_array_equal(res.best.position, again.best.position)
