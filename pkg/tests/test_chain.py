from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorforge.algebra import evaluate
from rotorforge.chain import (AssumptionViolation, ChainSpec, State, check_nondegenerate,
                              forces, hamiltonian, parse_potential)

from conftest import cosine_chain


def test_presets():
    assert parse_potential("cosine").modes == ((1, Fraction(-1, 2), Fraction(0)),)
    assert parse_potential("degenerate_quartic").modes == (
        (1, Fraction(-1, 2), Fraction(0)), (2, Fraction(1, 8), Fraction(0)))


def test_quartic_matches_its_closed_form():
    U = parse_potential("degenerate_quartic")
    psi = np.linspace(0, 2 * np.pi, 17)
    assert np.allclose(U(psi), (np.cos(psi) - 1) ** 2 / 2 - 0.75, atol=1e-15)


def test_custom_grammar_and_errors():
    U = parse_potential("1: 1/2, 3: -1/4 + 1/3 i")
    assert U.modes == ((1, Fraction(1, 2), Fraction(0)), (3, Fraction(-1, 4), Fraction(1, 3)))
    for bad in ("0: 1", "-1: 1", "1: 1, 1: 2", "1: x", "1: 1/0"):
        with pytest.raises(ValueError):
            parse_potential(bad)


def test_nondegeneracy_decisions():
    assert check_nondegenerate(parse_potential("cosine"))
    rep = check_nondegenerate(parse_potential("degenerate_quartic"))
    assert not rep and rep.witness == pytest.approx(0.0, abs=1e-12)


def test_gcd_procedure_regression_fixture():
    # U = cos psi - cos(3 psi)/2: recorded as non-degenerate, cross-checked on a grid
    U = parse_potential("1: 1/2, 3: -1/4")
    assert check_nondegenerate(U).nondegenerate is True
    psi = np.linspace(0, 2 * np.pi, 200001)
    assert np.min(U(psi, 1) ** 2 + U(psi, 2) ** 2) > 1e-3


def test_degenerate_chain_needs_flag():
    with pytest.raises(AssumptionViolation):
        ChainSpec.build(3, 3, 0.1, ["degenerate_quartic", "cosine"])
    ChainSpec.build(3, 3, 0.1, ["degenerate_quartic", "cosine"], degenerate_allowed=True)


def test_chain_invariants():
    with pytest.raises(ValueError):
        ChainSpec.build(3, 4, 1.0, "cosine")
    with pytest.raises(ValueError):
        ChainSpec.build(3, 1, 1.0, "cosine")
    with pytest.raises(ValueError):
        ChainSpec.build(3, 3, -1.0, "cosine")


def test_hamiltonian_values():
    L = 13.0
    assert hamiltonian(cosine_chain(3), State([0, 0, L], [0, 0, 0])) == pytest.approx(
        L * L / 2 - 2)
    assert hamiltonian(cosine_chain(4), State(np.zeros(4), np.zeros(4))) == pytest.approx(-3)


def test_forces_values():
    assert np.all(forces(cosine_chain(4), State(np.zeros(4), np.zeros(4))) == 0)
    F = forces(cosine_chain(2), State([0, 0], [0, np.pi / 2]))
    assert np.allclose(F, [1, -1], atol=1e-15)


_CHAINS = {
    "cosine4": cosine_chain(4),
    "mixed": ChainSpec.build(4, 3, 0.5, ["1: 1/2, 3: -1/4", "cosine", "2: 1/3 + 1/5 i"]),
}


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(sorted(_CHAINS)), st.integers(0, 2**31 - 1))
def test_hamiltonian_matches_exact_function(name, seed):
    chain = _CHAINS[name]
    rng = np.random.default_rng(seed)
    H = chain.hamiltonian_function()
    I = rng.normal(0, 5, chain.n)
    phi = rng.uniform(-10, 10, chain.n)
    ref = evaluate(H, I, phi)
    assert abs(hamiltonian(chain, State(I, phi)) - ref.real) <= 1e-12 * max(1, abs(ref))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(sorted(_CHAINS)), st.integers(0, 2**31 - 1))
def test_forces_match_finite_differences(name, seed):
    chain = _CHAINS[name]
    rng = np.random.default_rng(seed)
    I = rng.normal(0, 1, chain.n)
    phi = rng.uniform(0, 2 * np.pi, chain.n)
    F = forces(chain, State(I, phi))
    h = 1e-6
    for i in range(chain.n):
        e = np.zeros(chain.n)
        e[i] = h
        fd = (hamiltonian(chain, State(I, phi + e)) - hamiltonian(chain, State(I, phi - e))) / (2 * h)
        assert abs(F[i] + fd) <= 1e-8
