import json
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorforge.experiments import (PlateauNotFound, Report, Table, UndersampledError,
                                    WindowSeries, detect_quasi_stationary, fit_scaling,
                                    running_median, window_integrals, window_maxima)

from conftest import cosine_chain


def fake_traj(t, I, n=3, k=3):
    return SimpleNamespace(times=t, I=I, chain=cosine_chain(n, k))


# -- window maxima -------------------------------------------------------------------


def test_sinusoid_window_maxima():
    L, A = 10.0, 0.3
    t = np.arange(0, 40 * 2 * np.pi / L, 2 * np.pi / L / 256)
    I = np.zeros((len(t), 3))
    I[:, 0] = A * np.sin(L * t + 0.4)
    I[:, 2] = L + A * np.cos(L * t)
    s1 = window_maxima(fake_traj(t, I), 1, L)
    sk = window_maxima(fake_traj(t, I), 3, L)
    assert len(s1) == 39 or len(s1) == 40
    assert np.allclose(s1.maxima, A, rtol=1e-3)
    assert np.allclose(sk.maxima, A, rtol=1e-3)
    assert s1.window_length * L == pytest.approx(2 * np.pi)


def test_window_maxima_undersampled():
    L = 10.0
    t = np.arange(0, 5.0, 2 * np.pi / L / 4)
    with pytest.raises(UndersampledError):
        window_maxima(fake_traj(t, np.zeros((len(t), 3))), 1, L)


def test_window_length_must_match_L():
    with pytest.raises(ValueError):
        WindowSeries(1, 1.0, np.ones(3), L=10.0)


# -- plateau detection ---------------------------------------------------------------


def test_constant_series_plateau_at_start():
    s = WindowSeries(2, 0.5, np.full(400, 0.7), start_time=3.0)
    t_qs, level = detect_quasi_stationary(s)
    assert t_qs == 3.0 and level == 0.7


def test_too_short_series():
    with pytest.raises(ValueError):
        detect_quasi_stationary(WindowSeries(2, 0.5, np.ones(100)))


def test_growing_series_never_settles():
    x = np.exp(np.arange(400) / 20.0)
    with pytest.raises(PlateauNotFound):
        detect_quasi_stationary(WindowSeries(2, 0.5, x))


@pytest.mark.parametrize("tau,A", [(30.0, 5.0), (80.0, 2.0), (15.0, 50.0)])
def test_exponential_decay_crossing(tau, A):
    # x(w) = P (1 + A exp(-w / tau)); the even-span median of x[j .. j+49] is
    # P (1 + A cosh(0.5/tau) exp(-(j + 24.5)/tau)), and the detector needs the
    # drop over the next `hold` medians to stay below tol of the median itself
    P, tol, span, hold = 2e-3, 0.01, 50, 50
    w = np.arange(3000)
    s = WindowSeries(1, 0.1, P * (1 + A * np.exp(-w / tau)))
    t_qs, level = detect_quasi_stationary(s, span=span, tol=tol, hold=hold)
    q = math.exp(-(hold - 1) / tau)
    u_max = tol / (1 - q - tol)
    c = A * math.cosh(0.5 / tau)
    j_star = math.ceil(tau * math.log(c / u_max) - (span - 1) / 2)
    assert abs(t_qs / 0.1 - j_star) <= 2
    assert level == pytest.approx(P, rel=0.05)


def test_running_median_definition():
    x = np.array([5.0, 1.0, 3.0, 2.0, 8.0])
    assert list(running_median(x, 3)) == [3.0, 2.0, 3.0]
    assert len(running_median(x, 9)) == 0


# -- window integrals ----------------------------------------------------------------


@pytest.mark.parametrize("L", [10.0, 40.0, 160.0])
def test_window_integral_of_fast_profile(L):
    # G(L t)^2 with G = cos has unit-window integrals <G^2> + O(1/L)
    t = np.linspace(0, 20, 200001)
    y = np.cos(L * t) ** 2
    w = window_integrals(t, y, 0.0)
    assert len(w) == 20
    assert np.max(np.abs(w - 0.5)) <= 0.5 / L


# -- fitting -------------------------------------------------------------------------


def test_exact_power_law():
    f = fit_scaling([(L, 7 * L ** -3) for L in (10, 20, 40, 80)])
    assert f.exponent == pytest.approx(-3, abs=1e-12)
    assert f.prefactor == pytest.approx(7, rel=1e-12)
    assert f.r_squared == pytest.approx(1.0, abs=1e-12)
    assert f.predict(30) == pytest.approx(7 * 30 ** -3, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-0.05, 0.05), min_size=4, max_size=4))
def test_five_percent_noise(noise):
    pts = [(L, L ** -3 * (1 + e)) for L, e in zip((10, 20, 40, 80), noise)]
    assert abs(fit_scaling(pts).exponent + 3) <= 0.15


@settings(max_examples=100, deadline=None)
@given(st.floats(-8, 8), st.floats(0.01, 100), st.lists(st.floats(1, 1e4), min_size=3,
                                                         max_size=8, unique=True))
def test_power_laws_recovered(p, c, Ls):
    Ls = sorted(Ls)
    if Ls[-1] / Ls[0] < 1.5:
        return
    f = fit_scaling([(L, c * L ** p) for L in Ls])
    assert f.exponent == pytest.approx(p, abs=1e-8)


@pytest.mark.parametrize("pts", [[(10, 1), (20, 2)], [(10, 1), (20, 0), (40, 1)],
                                 [(10, 1), (-20, 2), (40, 1)], [(10, 1), (10, 2), (10, 3)]])
def test_fit_rejects_bad_input(pts):
    with pytest.raises(ValueError):
        fit_scaling(pts)


# -- reports -------------------------------------------------------------------------


def test_report_pass_fail_and_serialization():
    rep = Report("demo", params={"L": (10.0, 20.0)})
    rep.check("good", True, np.float64(0.5), 1)
    assert rep.passed
    rep.check("bad", False, float("nan"))
    assert not rep.passed and [c.name for c in rep.failed()] == ["bad"]
    rep.tables["t"] = Table(["L", "v"], [[10.0, 0.1], [20, 1 / 3]])
    data = json.loads(rep.to_json())
    assert data["checks"][1]["value"] == "nan"
    assert data["params"]["L"] == [10.0, 20.0]
    assert rep.tables["t"].to_csv() == "L,v\n10,0.10000000000000001\n20,0.33333333333333331\n"
    assert "FAIL" in rep.summary()
