import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorforge.algebra import (DomainSpec, action, add, angle_bracket, apply_Q, bond,
                                compile_function, conjugate, constant, cos_mode,
                                differentiate_I, differentiate_phi, dumps, evaluate,
                                evaluate_mp, inverse_form, is_zero, kinetic, lie_series,
                                loads, mul, poisson_bracket, scale, sin_mode,
                                split_resonant, sub, sup_norm_estimate, trig, with_k, zero)
from rotorforge.experiments import random_function

C21 = cos_mode(2, (-1, 1))  # cos(phi2 - phi1)
S21 = sin_mode(2, (-1, 1))


def same(f, g):
    return is_zero(sub(f, g))


# -- arithmetic ----------------------------------------------------------------------


def test_add_doubles_and_cancels():
    assert same(add(C21, C21), cos_mode(2, (-1, 1), 2))
    assert is_zero(add(C21, scale(C21, -1)))


def test_mul_by_one_and_by_inverse():
    assert same(mul(C21, constant(2, 1)), C21)
    prod = mul(action(2, 1), inverse_form(2, (1, 0)))
    assert same(prod, constant(2, 1))


def test_is_zero_distinguishes():
    assert not is_zero(C21)
    assert is_zero(zero(2))


def test_phi_derivatives():
    assert same(differentiate_phi(C21, 1), S21)
    e = trig(2, {(-1, 1): 1}, real=False)
    assert same(differentiate_phi(e, 2), trig(2, {(-1, 1): (0, 1)}, real=False))


def test_action_derivatives():
    half_sq = scale(action(2, 1, 2), Fraction(1, 2))
    assert same(differentiate_I(half_sq, 1), action(2, 1))
    inv = inverse_form(2, (-1, 1), k=2)
    d = differentiate_I(inv, 2)
    assert same(d, scale(inverse_form(2, (-1, 1), power=2, k=2), -1))
    assert is_zero(differentiate_I(inverse_form(3, (-1, 1, 0)), 3))


def test_bracket_with_action_and_homological_step():
    # {I_1, g} = -dg/dphi_1
    assert same(poisson_bracket(action(2, 1), C21), scale(S21, -1))
    # n = k = 2: chi0 = Q f0 with f0 = -cos(phi2 - phi1); {h0, chi0} = cos = -f0_NR
    f0 = scale(C21, -1)
    chi = apply_Q(f0, 2)
    assert same(poisson_bracket(kinetic(2), chi), C21)


def test_angle_bracket():
    h = scale(action(2, 1, 2), Fraction(1, 2))
    assert same(angle_bracket(1, h), action(2, 1))


def test_split_resonant_three_sites():
    f0 = add(scale(cos_mode(3, bond(3, 1)), -1), scale(cos_mode(3, bond(3, 2)), -1))
    R, NR = split_resonant(f0, 3)
    assert same(R, scale(cos_mode(3, bond(3, 1)), -1))
    assert same(NR, scale(cos_mode(3, bond(3, 2)), -1))


def test_Q_of_cos_and_sin():
    inv = inverse_form(2, (-1, 1), k=2)
    assert same(apply_Q(C21, 2), with_k(mul(S21, inv), 2))
    assert same(apply_Q(S21, 2), with_k(scale(mul(C21, inv), -1), 2))


def test_lie_series_trivial_generator_and_first_term():
    f = kinetic(2)
    assert same(lie_series(C21, zero(2), 0, 3), C21)
    f0 = scale(C21, -1)
    chi = apply_Q(f0, 2)
    first = lie_series(f, chi, 1, 1)
    _, NR = split_resonant(f0, 2)
    assert same(first, scale(NR, -1))


def test_evaluate_closed_forms():
    L = 37.0
    assert evaluate(kinetic(3), [0, 0, L], [0.3, 1.1, 2.0]) == pytest.approx(L * L / 2)
    assert abs(evaluate(C21, [0, 0], [0, math.pi / 2])) < 1e-15
    chi = apply_Q(scale(C21, -1), 2)
    assert evaluate(chi, [0, L], [0, math.pi / 2]) == pytest.approx(-1 / L, rel=1e-14)


def test_sup_norm_constant_and_strip_growth():
    dom = DomainSpec(10.0, 0.05, 0.5)
    assert sup_norm_estimate(constant(2, Fraction(-3, 2)), dom, budget=64) == 1.5
    prev = 0.0
    for budget in (64, 512, 4096):
        est = sup_norm_estimate(C21, dom, budget=budget)
        assert prev <= est <= math.cosh(1.0) + 1e-12
        prev = est
    assert prev > 0.98 * math.cosh(1.0)


def test_lie_tail_order_fit():
    # chi = O(L^-1), so the l0-tail of e^chi f scales like L^(-2 l0)
    from rotorforge.experiments import fit_scaling
    f = scale(cos_mode(3, bond(3, 1)), -1)
    chi = apply_Q(scale(cos_mode(3, bond(3, 2)), -1), 3)
    for l0 in (1, 2):
        tail = lie_series(f, chi, l0, l0 + 2)
        pts = [(L, sup_norm_estimate(tail, DomainSpec(L, 0.03, 0.5), budget=512))
               for L in (10.0, 20.0, 40.0, 80.0)]
        assert abs(fit_scaling(pts).exponent - (-2 * l0)) <= 0.3


def test_serialization_round_trip_example():
    chi = apply_Q(scale(C21, -1), 2)
    back = loads(dumps(chi))
    assert back == chi and dumps(back) == dumps(chi)


# -- properties ----------------------------------------------------------------------


def _triple(seed, linear_h=False):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    k = int(rng.integers(1, n + 1))
    f = apply_Q(random_function(rng, n, k, max_mode=2, max_terms=2).function(), k)
    g = random_function(rng, n, k, max_mode=2, max_terms=2).function()
    h = random_function(rng, n, k, max_mode=2, max_terms=2, linear=linear_h).function()
    return n, k, f, g, h


seeds = st.integers(min_value=0, max_value=10_000)
PROP = settings(max_examples=20, deadline=None)


@PROP
@given(seeds)
def test_bracket_antisymmetric(seed):
    _, _, f, g, _ = _triple(seed)
    assert is_zero(add(poisson_bracket(f, g), poisson_bracket(g, f)))


@PROP
@given(seeds)
def test_jacobi_identity(seed):
    _, _, f, g, h = _triple(seed)
    pb = poisson_bracket
    assert is_zero(add(add(pb(f, pb(g, h)), pb(g, pb(h, f))), pb(h, pb(f, g))))


@PROP
@given(seeds)
def test_leibniz_rule(seed):
    _, _, f, g, h = _triple(seed)
    pb = poisson_bracket
    assert is_zero(sub(pb(f, mul(g, h)), add(mul(pb(f, g), h), mul(g, pb(f, h)))))


@PROP
@given(seeds)
def test_real_functions_stay_real(seed):
    _, _, f, g, _ = _triple(seed)
    fr, gr = add(f, conjugate(f)), add(g, conjugate(g))
    assert fr.check_real() and poisson_bracket(fr, gr).check_real()


@PROP
@given(seeds)
def test_serialization_round_trip(seed):
    _, _, f, g, _ = _triple(seed)
    for x in (f, g, poisson_bracket(f, g)):
        assert is_zero(sub(loads(dumps(x)), x))


@PROP
@given(seeds)
def test_double_matches_multiprecision(seed):
    n, k, f, g, _ = _triple(seed)
    rng = np.random.default_rng(seed + 1)
    I = rng.uniform(-1, 1, n)
    I[k - 1] += 50.0
    phi = rng.uniform(0, 2 * np.pi, n)
    fg = poisson_bracket(f, g)
    num = complex(compile_function(fg)(I, phi))
    ref = complex(evaluate_mp(fg, I, phi, 50))
    assert abs(num - ref) <= 1e-12 * max(1.0, abs(ref))


@PROP
@given(seeds)
def test_homological_equation(seed):
    # h0 only sees angles, so {h0, Q g} = -g_NR for action-dependent coefficients too
    n, k, _, g, _ = _triple(seed)
    chi = apply_Q(g, k)
    _, NR = split_resonant(g, k)
    assert is_zero(add(poisson_bracket(kinetic(n), chi), NR))
    assert chi.is_nonresonant(k) or chi.is_syntactically_zero()
