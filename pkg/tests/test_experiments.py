from fractions import Fraction

import numpy as np
import pytest

from rotorforge.chain import AssumptionViolation, ChainSpec
from rotorforge.experiments import (ExperimentConfig, RandomFunction, norm_bound_checks,
                                    asymptotic_comparison, ball_start, degenerate_experiment,
                                    i1_amplitude, initial_state, cold_start, random_function,
                                    run_plateau, symmetry_experiment, verify_chain)
from rotorforge.experiments.bounds import bound_checks_for_seed
from rotorforge.experiments.runs import plateau_confirmed, sweep

from conftest import cosine_chain


def test_config_validation():
    chain = cosine_chain(3)
    with pytest.raises(ValueError):
        ExperimentConfig(chain, L_list=(20.0, 10.0))
    with pytest.raises(ValueError):
        ExperimentConfig(chain, L_list=(1.0,))
    with pytest.raises(ValueError):
        ExperimentConfig(chain, transient="sometimes")
    with pytest.raises(ValueError):
        ExperimentConfig(chain, L_list=(10.0, 20.0)).require_fit()
    assert ExperimentConfig(chain).resolved("ramp").transient == "ramp"
    assert ExperimentConfig(chain, transient="cold").resolved("ramp").transient == "cold"


def test_start_states():
    chain = cosine_chain(3)
    s = cold_start(chain, 20.0)
    assert list(s.I) == [0, 0, 20.0] and not s.phi.any()
    b = ball_start(chain, 20.0, 1.0, seed=3)
    assert np.all(np.abs(b.I - [0, 0, 20.0]) <= 1.0)
    assert np.array_equal(b.I, ball_start(chain, 20.0, 1.0, seed=3).I)
    cfg = ExperimentConfig(chain, transient="ramp", ramp_time=50.0)
    r = initial_state(cfg, 20.0)
    assert abs(r.I[2] - 20.0) < 0.1 and np.any(r.phi != 0)


def test_plateau_confirmation_rule():
    from rotorforge.integrator import WindowStats
    nw = 400
    flat = WindowStats(0.1, 0.0, np.ones((nw, 3)), np.zeros(nw), np.full(nw, 1e-3),
                       np.ones((nw, 3)))
    assert plateau_confirmed(flat, 3, 0.05, 1.0)
    drift = np.linspace(1, 3, nw)[:, None] * np.ones((1, 3))
    moving = WindowStats(0.1, 0.0, drift, np.zeros(nw), np.full(nw, 1e-3), drift)
    assert not plateau_confirmed(moving, 3, 0.05, 1.0)


def test_four_site_plateaus_ordered_and_sequential():
    cfg = ExperimentConfig(cosine_chain(4), L_list=(10.0,), transient="cold")
    r = run_plateau(cfg, 10.0)
    assert r.plateau
    assert r.levels[0] < r.levels[1] < r.levels[2]
    assert r.onset[3] < r.onset[2] < r.onset[1]


def test_four_site_levels_at_large_L():
    cfg = ExperimentConfig(cosine_chain(4), L_list=(100.0,), transient="ramp",
                           min_windows=2000, max_time=2000.0)
    r = run_plateau(cfg, 100.0)
    assert r.levels[2] == pytest.approx(1e-2, rel=0.15)
    assert r.levels[0] == pytest.approx(1e-10, rel=0.15)


def _square(x):
    return x * x


def test_sweep_parallel_matches_serial():
    assert sweep(_square, [1, 2, 3], jobs=2) == sweep(_square, [1, 2, 3], jobs=1) == [1, 4, 9]


# -- refusals -------------------------------------------------------------------------


def test_symmetry_needs_site_right_of_fast_one():
    with pytest.raises(ValueError, match="k < n"):
        symmetry_experiment(ExperimentConfig(cosine_chain(3)))


def test_asymptotics_refuses_other_potentials():
    chain = ChainSpec.build(3, 3, 1.0, ["1: -1/2, 2: 1/10", "cosine"])
    with pytest.raises(ValueError, match="cos"):
        asymptotic_comparison(ExperimentConfig(chain, L_list=(40.0,)))


def test_degenerate_refusals():
    L3 = (10.0, 15.0, 20.0)
    with pytest.raises(ValueError, match="nondegenerate"):
        degenerate_experiment(ExperimentConfig(cosine_chain(3, gamma=0.1), L_list=L3))
    with pytest.raises(ValueError, match="n = k = 3"):
        degenerate_experiment(ExperimentConfig(cosine_chain(4, gamma=0.1), L_list=L3))
    chain = ChainSpec.build(3, 3, 0.1, ["degenerate_quartic", "cosine"], degenerate_allowed=True)
    unflagged = ChainSpec.__new__(ChainSpec)
    object.__setattr__(unflagged, "__dict__", dict(chain.__dict__, degenerate_allowed=False))
    with pytest.raises(AssumptionViolation):
        degenerate_experiment(ExperimentConfig(unflagged, L_list=L3))


def test_degenerate_amplitude_formula():
    # max of c - c^3/3 on [-1, 1] is 2/3, divided by 2 L^7
    c = np.linspace(-1, 1, 200001)
    assert np.max(c - c ** 3 / 3) / 2 == pytest.approx(i1_amplitude(1.0), rel=1e-9)


# -- bounds ---------------------------------------------------------------------------


def test_random_functions_seeded():
    a = random_function(np.random.default_rng(5), 3, 2)
    b = random_function(np.random.default_rng(5), 3, 2)
    assert a == b
    assert any(mu[1] != 0 for mu, _, _ in a.modes)


def test_majorant_dominates_samples():
    from rotorforge.algebra import DomainSpec, sup_norm_estimate
    for seed in range(10):
        f = random_function(np.random.default_rng(seed), 3, 3)
        r = 0.9 / (6 * f.max_mode)
        est = sup_norm_estimate(f.function(), DomainSpec(100.0, r, 1.0), budget=512)
        assert est <= f.majorant(100.0, r, 1.0) * (1 + 1e-12)


def test_scaled_majorant():
    f = RandomFunction(2, 2, (((0, 1), Fraction(1), (Fraction(0), Fraction(1, 2))),))
    assert f.scaled(Fraction(1, 4)).majorant(10.0, 0.1, 1.0) == pytest.approx(
        f.majorant(10.0, 0.1, 1.0) / 4)


def test_bounds_rows_for_a_few_seeds():
    rows = bound_checks_for_seed(0, (100.0,))
    names = {r[0] for r in rows}
    assert {"Q", "bracket", "ad^1", "ad^3", "lie_sum l0=2", "restriction R"} <= names
    rep = norm_bound_checks(seeds=range(3), L_values=(100.0,), budget=256)
    assert rep.passed


def test_verify_chain_two_sites():
    rep = verify_chain(cosine_chain(2), seeds=range(2))
    assert rep.passed and "identities" in rep.tables and "algebra" in rep.tables
