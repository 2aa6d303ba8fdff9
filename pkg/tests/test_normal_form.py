from fractions import Fraction

import numpy as np
import pytest

from rotorforge.algebra import (DomainSpec, add, apply_Q, bond, cos_mode, evaluate, is_zero,
                                mul, radius_limit, scale, sin_mode, sub, sup_norm_estimate)
from rotorforge.chain import ChainSpec
from rotorforge.experiments import fit_scaling
from rotorforge.normal_form import (build_initial, build_normal_form, check_identities,
                                    compute_p1_bundle, dumps_normal_form,
                                    hamiltonian_discrepancy, loads_normal_form, seeded_point,
                                    transform_state)

from conftest import cosine_chain

LS = (10.0, 20.0, 40.0, 80.0)


def same(f, g):
    return is_zero(sub(f, g))


@pytest.fixture(scope="module")
def nf3():
    return build_normal_form(cosine_chain(3))


def test_initial_split_three_sites():
    h0, R, NR = build_initial(cosine_chain(3))
    assert same(R, scale(cos_mode(3, bond(3, 1)), -1))
    assert same(NR, scale(cos_mode(3, bond(3, 2)), -1))


def test_initial_split_five_sites():
    chain = ChainSpec.build(5, 3, 1.0, ["cosine", "1: 1/3", "2: 1/5", "1: -1/7"])
    _, R, NR = build_initial(chain)
    U = chain.potentials
    assert same(NR, add(U[1].on_bond(5, 2), U[2].on_bond(5, 3)))
    assert same(R, add(U[0].on_bond(5, 1), U[3].on_bond(5, 4)))


def test_first_generator_two_sites():
    nf = build_normal_form(cosine_chain(2))
    from rotorforge.algebra import inverse_form, with_k
    chi = with_k(scale(mul(sin_mode(2, (-1, 1)), inverse_form(2, (-1, 1), k=2)), -1), 2)
    assert same(nf.generators[0], chi)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_identities_hold_exactly(n):
    ids = check_identities(build_normal_form(cosine_chain(n)))
    for name, flags in ids.items():
        assert all(flags), name


def test_generator_supports_four_sites():
    nf = build_normal_form(cosine_chain(4))
    assert len(nf.generators) == 3
    assert 1 in nf.generators[2].support()
    assert 1 not in nf.generators[1].support()


def _norm_fit(f):
    r = min(0.05, 0.9 * radius_limit(f))
    return fit_scaling([(L, sup_norm_estimate(f, DomainSpec(L, r, 0.5), budget=1024))
                        for L in LS]).exponent


def test_layer_and_generator_orders(nf3):
    assert abs(_norm_fit(nf3.layers[1]) + 2) <= 0.3
    for j, chi in enumerate(nf3.generators):
        assert abs(_norm_fit(chi) - (-2 * j - 1)) <= 0.3


def test_mean_square_profile_is_one_half():
    for n in (2, 3, 4):
        b = compute_p1_bundle(build_normal_form(cosine_chain(n)))
        assert b.G_sq_mean == Fraction(1, 2)
        assert all(abs(a) == Fraction(1, 2) and c == 0 for a, c in b.G.values())


def test_profile_three_sites(nf3):
    b = compute_p1_bundle(nf3)
    assert b.G == {1: (Fraction(1, 2), Fraction(0)), -1: (Fraction(1, 2), Fraction(0))}
    expected = scale(mul(cos_mode(3, bond(3, 1)), cos_mode(3, bond(3, 2))), -1)
    assert same(b.M1, expected)


def test_p1_leading_two_sites():
    b = compute_p1_bundle(build_normal_form(cosine_chain(2)))
    L = 50.0
    for theta in np.linspace(0.1, 3.0, 7):
        p = evaluate(b.p1_leading, [0.0, L], [0.0, theta])
        m = evaluate(b.M1, [0.0, L], [0.0, theta])
        assert abs(p) == pytest.approx(abs(np.cos(theta)) / L, rel=1e-13)
        assert abs(m) / L == pytest.approx(abs(p), rel=1e-13)


def _ball(n, k, L, count, seed):
    rng = np.random.default_rng(seed)
    pts = [seeded_point(n, k, L, rng) for _ in range(count)]
    return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def test_transform_orders(nf3):
    dI, dphi = [], []
    for L in LS:
        I, phi = _ball(3, 3, L, 32, 0)
        In, pn = transform_state(nf3, I, phi)
        dI.append((L, np.max(np.abs(In - I))))
        dphi.append((L, np.max(np.abs(np.angle(np.exp(1j * (pn - phi)))))))
    assert abs(fit_scaling(dI).exponent + 1) <= 0.3
    assert abs(fit_scaling(dphi).exponent + 2) <= 0.3


def test_transform_round_trip(nf3):
    I, phi = _ball(3, 3, 100.0, 16, 1)
    In, pn = transform_state(nf3, I, phi, order=4)
    Ib, pb = transform_state(nf3, In, pn, order=4, inverse=True)
    assert np.max(np.abs(Ib - I)) <= 1e-8
    assert np.max(np.abs(pb - phi)) <= 1e-8


def test_transformed_hamiltonian_consistent(nf3):
    I, phi = _ball(3, 3, 100.0, 3, 2)
    In, pn = transform_state(nf3, I, phi, order=4)
    for i in range(3):
        assert hamiltonian_discrepancy(nf3, In[i], pn[i], order=4) <= 1e-9


def test_serialized_normal_form_round_trip(nf3):
    text = dumps_normal_form(nf3, timestamp="fixed")
    back = loads_normal_form(text)
    assert back.max_order == nf3.max_order
    for a, b in zip(back.generators + back.resonant_layers + [back.final_f],
                    nf3.generators + nf3.resonant_layers + [nf3.final_f]):
        assert same(a, b)
    assert dumps_normal_form(back, timestamp="fixed") == text
    with pytest.raises(ValueError):
        loads_normal_form(text.replace("generator 0", "generator 9"))


def test_Q_matches_generator_definition(nf3):
    assert same(nf3.generators[0], apply_Q(nf3.layers[0], 3))
