import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from rotorforge.chain import State, forces, hamiltonian
from rotorforge.integrator import (IntegratorConfig, energy_balance_residual, integrate,
                                   integrate_decoupled, prepare_quasi_stationary, step,
                                   trajectory_csv)

from conftest import cosine_chain


def start(n, k, L, seed=0):
    rng = np.random.default_rng(seed)
    I = rng.uniform(-0.5, 0.5, n)
    I[k - 1] = L
    return State(I, rng.uniform(0, 2 * np.pi, n))


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(scheme="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(steps_per_fast_period=8)
    with pytest.raises(ValueError):
        IntegratorConfig(t_final=-1)
    assert IntegratorConfig(steps_per_fast_period=64).stride == 8


def test_conservative_drift_small():
    chain = cosine_chain(3, gamma=0.0)
    tr = integrate(chain, start(3, 3, 10.0), IntegratorConfig(t_final=100.0))
    assert tr.final_dissipated == 0.0
    assert energy_balance_residual(tr) <= 1e-8 * max(1.0, abs(tr.H0))


def test_energy_balance_at_defaults():
    chain = cosine_chain(3, gamma=1.0)
    s0 = start(3, 3, 10.0)
    res = []
    for npp in (64, 128):
        tr = integrate(chain, s0, IntegratorConfig(t_final=1e4, steps_per_fast_period=npp,
                                                   sample_stride=512))
        res.append(energy_balance_residual(tr))
        assert res[-1] <= 1e-5 * max(1.0, abs(tr.H0))
    # both resolutions agree on the dissipated energy to the residual level
    assert tr.final_dissipated > 0


def test_strang_second_order():
    chain = cosine_chain(3, gamma=0.5)
    s0 = start(3, 3, 10.0, seed=3)
    res = [energy_balance_residual(integrate(chain, s0, IntegratorConfig(
        "strang2", npp, 20.0, sample_stride=1))) for npp in (32, 64, 128)]
    ratios = [res[0] / res[1], res[1] / res[2]]
    for r in ratios:
        assert 3.0 <= r <= 5.0


def test_strang_against_rk4():
    chain = cosine_chain(3, gamma=1.0)
    s0 = start(3, 3, 10.0, seed=1)
    a = integrate(chain, s0, IntegratorConfig("strang2", 256, 10.0, sample_stride=0))
    b = integrate(chain, s0, IntegratorConfig("rk4", 256, 10.0, sample_stride=0))
    assert np.max(np.abs(a.final.as_vector() - b.final.as_vector())) <= 1e-4


def test_yoshida_fourth_order_against_independent_solver():
    chain = cosine_chain(3, gamma=1.0)
    s0 = start(3, 3, 5.0, seed=2)

    def rhs(t, y):
        I, phi = y[:3], y[3:]
        dI = forces(chain, State(I, phi))
        dI[0] -= chain.gamma * I[0]
        return np.concatenate([dI, I])

    errs = []
    for npp in (128, 256):
        tr = integrate(chain, s0, IntegratorConfig("yoshida4", npp, 5.0, sample_stride=0))
        # whole steps: the run ends at times[-1], possibly just past t_final
        ref = solve_ivp(rhs, (0, tr.times[-1]), s0.as_vector(), method="DOP853",
                        rtol=1e-13, atol=1e-13)
        errs.append(np.max(np.abs(tr.final.as_vector() - ref.y[:, -1])))
    assert 10.0 <= errs[0] / errs[1] <= 22.0
    assert errs[1] <= 1e-8


def test_step_matches_integrate():
    chain = cosine_chain(3, gamma=1.0)
    s0 = start(3, 3, 10.0)
    cfg = IntegratorConfig("strang2", 64, 0.0, sample_stride=0)
    h = cfg.step_size(10.0)
    s = s0
    for _ in range(5):
        s = step(chain, s, h, "strang2")
    tr = integrate(chain, s0, IntegratorConfig("strang2", 64, 5 * h, sample_stride=0), L=10.0)
    assert np.allclose(s.as_vector(), tr.final.as_vector(), atol=1e-13)


def test_decoupled_freezes_fast_site():
    chain = cosine_chain(4, k=3, gamma=1.0)
    s0 = start(4, 3, 20.0)
    tr = integrate_decoupled(chain, s0, IntegratorConfig(t_final=5.0))
    assert np.all(tr.I[:, 2] == s0.I[2])
    assert tr.decoupled


def test_quasi_stationary_preparation_small_slow_actions():
    chain = cosine_chain(3, gamma=1.0)
    s = prepare_quasi_stationary(chain, 20.0, ramp_time=100.0)
    assert abs(s.I[2] - 20.0) < 0.1
    assert np.all(np.abs(s.I[:2]) < 0.2)


def test_window_stats_consistent_with_samples():
    chain = cosine_chain(3, gamma=1.0)
    tr = integrate(chain, start(3, 3, 10.0), IntegratorConfig(
        t_final=20.0, sample_stride=1, window_stats=True))
    w = tr.windows
    assert w.n_windows == int(20.0 / w.window_length + 1e-9)
    first = tr.times <= w.window_length + 1e-12
    assert w.maxima[0, 0] == pytest.approx(np.max(np.abs(tr.I[first, 0])), rel=1e-12)


def test_csv_header_and_rows():
    chain = cosine_chain(2, gamma=0.0)
    tr = integrate(chain, start(2, 2, 5.0), IntegratorConfig(t_final=1.0, sample_stride=0))
    text = trajectory_csv(tr)
    lines = text.splitlines()
    assert lines[0] == "t,I1,I2,phi1,phi2,H,dissipated"
    assert len(lines) == 3


def test_bad_state_rejected():
    chain = cosine_chain(3)
    with pytest.raises(ValueError):
        integrate(chain, State([0, 0], [0, 0]), IntegratorConfig())
    with pytest.raises(ValueError):
        integrate(chain, State([np.nan, 0, 1], [0, 0, 0]), IntegratorConfig())


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 2.0),
       st.sampled_from([("strang2", 1e-3), ("yoshida4", 1e-6)]))
def test_energy_balance_property(seed, gamma, scheme_tol):
    scheme, tol = scheme_tol
    chain = cosine_chain(3, gamma=gamma)
    tr = integrate(chain, start(3, 3, 8.0, seed), IntegratorConfig(scheme, 64, 10.0))
    assert energy_balance_residual(tr) <= tol * max(1.0, abs(tr.H0))
    assert np.all(np.diff(tr.dissipated) >= 0)
    H = hamiltonian(chain, State(tr.I, tr.phi))
    assert np.allclose(H, tr.H, rtol=1e-10, atol=1e-10)
