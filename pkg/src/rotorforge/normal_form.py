"""Inductive Lie-transform normal form of a rotator chain with one fast site.

Step ``j`` eliminates the non-resonant part of ``f^(j)`` with the generator
``chi^(j) = Q f^(j)`` and pushes the remaining terms one order further.  All
pieces are exact :class:`FourierFunction` objects.

Nested brackets create coefficient parts that decay much faster than the
remainder the construction neglects anyway.  By default parts decaying
faster than ``L^-(2k+2)`` are dropped after every bracket; the identities
``{h0, chi^(j)} + f^(j,NR) = 0`` stay exact for the layers that are kept.
Pass ``max_order=None`` for the untruncated series.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import (FourierFunction, action, add, apply_Q, compile_function,
                      differentiate_I, differentiate_phi, dumps, evaluate,
                      is_zero, kinetic, loads, mul, poisson_bracket, scale,
                      split_resonant, total, trig, zero)
from .algebra.fourier import lie_series
from .chain import ChainSpec, Potential

MAX_K = 5


@dataclass
class NormalFormState:
    """Bookkeeping between iterations: ``f^(j)`` and what came before."""

    j: int
    current: FourierFunction
    resonant: List[FourierFunction]
    generators: List[FourierFunction]
    layers: List[FourierFunction]


@dataclass
class NormalFormResult:
    chain: ChainSpec
    h0: FourierFunction
    resonant_layers: List[FourierFunction]
    generators: List[FourierFunction]
    final_f: FourierFunction
    cutoff: int
    layers: List[FourierFunction] = field(default_factory=list)
    max_order: Optional[int] = None

    @property
    def k(self) -> int:
        return self.chain.k

    @property
    def n(self) -> int:
        return self.chain.n

    def transformed_hamiltonian(self) -> FourierFunction:
        """``h0 + sum_m f^(m,R) + f^(k-1)``."""
        return total([self.h0, *self.resonant_layers, self.final_f], self.n)


def build_initial(chain: ChainSpec):
    """``h0 = sum I_i^2/2`` and the split ``(f0_R, f0_NR)`` of the potential."""
    n, k = chain.n, chain.k
    f0 = total([U.on_bond(n, i) for i, U in enumerate(chain.potentials, 1)], n)
    f0_R, f0_NR = split_resonant(f0, k)
    return kinetic(n), f0_R, f0_NR


def run_iteration(state: NormalFormState, k: int, nstar: int,
                  budget: Optional[int] = None, max_order: Optional[int] = None
                  ) -> NormalFormState:
    """Advance from ``f^(j-1)`` to ``f^(j)``.

    With ``S = sum_{m <= j-1} f^(m,R)`` and ``B = f^(j-1,NR)`` the update is
    ``f^(j) = sum_{l=1}^{N*-1} (ad^l S + l/(l+1) ad^l B) / l!``, which is the
    same as pushing ``sum_{m<=j-2} f^(m,R) + f^(j-1) - B/(l+1)`` through
    ``ad^l`` of ``chi = Q f^(j-1)``.
    """
    f_prev = state.current
    f_R, f_NR = split_resonant(f_prev, k)
    chi = apply_Q(f_prev, k)
    resonant = state.resonant + [f_R]
    S = total(resonant, f_prev.n)
    weights_S = [1] * (nstar - 1)
    weights_B = [Fraction(ell, ell + 1) for ell in range(1, nstar)]
    nxt = add(lie_series(S, chi, 1, nstar - 1, weights_S, budget, max_order),
              lie_series(f_NR, chi, 1, nstar - 1, weights_B, budget, max_order))
    return NormalFormState(
        j=state.j + 1,
        current=nxt,
        resonant=resonant,
        generators=state.generators + [chi],
        layers=state.layers + [nxt],
    )


_AUTO = "auto"


def default_max_order(k: int) -> int:
    return 2 * k + 2


def build_normal_form(chain: ChainSpec, nstar: Optional[int] = None,
                      max_k: int = MAX_K, budget: Optional[int] = None,
                      max_order=_AUTO) -> NormalFormResult:
    """Run ``k - 1`` iterations and collect generators and resonant layers.

    Parameters
    ----------
    chain : ChainSpec
    nstar : int, optional
        Lie-series cutoff ``N*``; defaults to ``k``.
    max_k : int
        Largest ``k`` accepted.
    budget : int, optional
        Term cap for intermediate results.
    max_order : int or None
        Decay order beyond which coefficient parts are dropped.  The default
        is ``2k + 2``; ``None`` keeps every term.
    """
    k = chain.k
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > max_k:
        raise ValueError(f"k = {k} exceeds the configured maximum {max_k}")
    nstar = k if nstar is None else nstar
    if max_order == _AUTO:
        max_order = default_max_order(k)
    h0, f0_R, f0_NR = build_initial(chain)
    f0 = add(f0_R, f0_NR)
    state = NormalFormState(0, f0, [], [], [f0])
    for _ in range(1, k):
        state = run_iteration(state, k, nstar, budget, max_order)
    return NormalFormResult(
        chain=chain,
        h0=h0,
        resonant_layers=state.resonant,
        generators=state.generators,
        final_f=state.current,
        cutoff=nstar,
        layers=state.layers,
        max_order=max_order,
    )


# -- structural checks ------------------------------------------------------------


def support_window(k: int, j: int, n: int) -> Tuple[int, int]:
    """Sites ``max(1, k-j-1) .. min(k+j+1, n)`` allowed for layer ``j``."""
    return max(1, k - j - 1), min(k + j + 1, n)


def check_identities(nf: NormalFormResult) -> Dict[str, list]:
    """Exact checks of the homological identity, resonance classes and supports."""
    k, n = nf.k, nf.n
    out = {"homological": [], "generator_nonresonant": [], "layer_resonant": [],
           "layer_support": [], "generator_support": []}
    for j, chi in enumerate(nf.generators):
        f_j = nf.layers[j]
        _, f_NR = split_resonant(f_j, k)
        out["homological"].append(is_zero(add(poisson_bracket(nf.h0, chi), f_NR)))
        out["generator_nonresonant"].append(chi.is_nonresonant(k))
        lo, hi = support_window(k, j, n)
        out["generator_support"].append(chi.support() <= set(range(lo, hi + 1)))
    for f_R in nf.resonant_layers:
        out["layer_resonant"].append(f_R.is_resonant(k))
    for j, f_j in enumerate(nf.layers):
        if j == 0:
            continue
        lo, hi = support_window(k, j, n)
        out["layer_support"].append(f_j.support() <= set(range(lo, hi + 1)))
    return out


# -- P1, G and M1 -----------------------------------------------------------------


@dataclass
class P1Bundle:
    p1_leading: FourierFunction
    p1_product: FourierFunction
    M1: FourierFunction
    G: Dict[int, Tuple[Fraction, Fraction]]
    G_sq_mean: Fraction
    relative_sign: int
    g_argument: str


def antiderivative_series(U: Potential, times: int) -> Dict[int, Tuple[Fraction, Fraction]]:
    """Zero-mean ``times``-fold antiderivative: coefficients divided by (i m)^times."""
    out = {}
    for m, (a, b) in U.series(0).items():
        cr, ci = a, b
        for _ in range(times):
            # divide by i m: (cr + i ci)/(i m) = (ci - i cr)/m
            cr, ci = ci / m, -cr / m
        out[m] = (cr, ci)
    return out


def seeded_point(n: int, k: int, L: float, rng: np.random.Generator, rho: float = 1.0):
    """Point of the real ball ``|I_i - L delta_ik| <= rho`` with random angles."""
    I = rng.uniform(-rho, rho, n)
    I[k - 1] += L
    phi = rng.uniform(0, 2 * np.pi, n)
    return I, phi


def compute_p1_bundle(nf: NormalFormResult, g_argument: str = "bond",
                      seed: int = 7) -> P1Bundle:
    """Leading and product forms of ``P1``, and the profile ``M1``.

    ``g_argument`` selects ``G(phi_k - phi_{k-1})`` (``"bond"``) or
    ``G(phi_k)`` (``"site"``).
    """
    chain = nf.chain
    n, k = chain.n, chain.k
    if k < 2:
        raise ValueError("k must be at least 2")
    p1_leading = scale(differentiate_phi(nf.generators[-1], 1), -1)

    g = chain.potentials[k - 2].on_bond(n, k - 1, order=1)
    for i in range(k - 2, 0, -1):
        g = mul(chain.potentials[i - 1].on_bond(n, i, order=2),
                apply_Q(apply_Q(g, k), k))
    p1_product = scale(apply_Q(g, k), -1)

    G = antiderivative_series(chain.potentials[k - 2], 2 * k - 4)
    if g_argument == "bond":
        unit = [0] * n
        unit[k - 1], unit[k - 2] = 1, -1
    elif g_argument == "site":
        unit = [0] * n
        unit[k - 1] = 1
    else:
        raise ValueError("g_argument must be 'bond' or 'site'")
    G_fun = trig(n, {tuple(m * v for v in unit): c for m, c in G.items()}, real=True)
    M1 = scale(G_fun, -1)
    for i in range(1, k - 1):
        M1 = mul(chain.potentials[i - 1].on_bond(n, i, order=2), M1)
    G_sq = sum((a * a + b * b for a, b in G.values()), Fraction(0))

    rng = np.random.default_rng(seed)
    sign = 0
    for _ in range(16):
        I, phi = seeded_point(n, k, 100.0, rng)
        a = evaluate(p1_leading, I, phi)
        b = evaluate(p1_product, I, phi)
        if abs(a) > 1e-12 and abs(b) > 1e-12:
            sign = int(np.sign(np.real(a / b)))
            break
    return P1Bundle(p1_leading, p1_product, M1, G, G_sq, sign, g_argument)


# -- coordinate transform ---------------------------------------------------------


def _exp_angle_delta(a: int, delta: FourierFunction, chi: FourierFunction,
                     order: int, budget, max_order=None) -> FourierFunction:
    """New delta with ``e^chi (phi_a + delta) = phi_a + new delta`` (truncated)."""
    out = lie_series(delta, chi, 0, order, budget=budget, max_order=max_order)
    term = differentiate_I(chi, a)  # {phi_a, chi}
    fact = 1
    for ell in range(1, order + 1):
        fact *= ell
        if term.is_syntactically_zero():
            break
        out = add(out, scale(term, Fraction(1, fact)))
        if ell < order:
            term = poisson_bracket(term, chi, budget, max_order)
    return out


class CoordinateTransform:
    """Truncated maps ``x -> x~`` and ``x~ -> x`` built from the generators.

    ``x~_a = e^{-chi0} ... e^{-chi^(k-2)} x_a`` (the innermost exponential acts
    first) and ``x_a = e^{chi^(k-2)} ... e^{chi0} x~_a``.  Actions map to
    Fourier functions; angles map to ``phi_a`` plus a Fourier function.
    """

    def __init__(self, nf: NormalFormResult, order: Optional[int] = None,
                 budget: Optional[int] = None):
        order = nf.k if order is None else order
        if order < 1:
            raise ValueError("order must be at least 1")
        self.n = nf.n
        self.order = order
        self.max_order = nf.max_order
        forward = [scale(chi, -1) for chi in reversed(nf.generators)]
        backward = list(nf.generators)
        self.forward = self._build(forward, budget)
        self.backward = self._build(backward, budget)
        self._fc = [compile_function(f) for f in self.forward]
        self._bc = [compile_function(f) for f in self.backward]

    def _build(self, sequence, budget):
        n = self.n
        actions, deltas = [], []
        for a in range(1, n + 1):
            F = action(n, a)
            D = zero(n)
            for chi in sequence:
                F = lie_series(F, chi, 0, self.order, budget=budget,
                               max_order=self.max_order)
                D = _exp_angle_delta(a, D, chi, self.order, budget, self.max_order)
            actions.append(F)
            deltas.append(D)
        return actions + deltas

    def _apply(self, compiled, I, phi):
        I = np.atleast_2d(np.asarray(I, dtype=float))
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        n = self.n
        newI = np.stack([np.real(compiled[a](I, phi)) for a in range(n)], axis=1)
        newphi = phi + np.stack([np.real(compiled[n + a](I, phi)) for a in range(n)], axis=1)
        return newI, newphi

    def to_new(self, I, phi):
        """``x -> x~``; rows are points."""
        return self._apply(self._fc, I, phi)

    def to_old(self, I, phi):
        """``x~ -> x``; rows are points."""
        return self._apply(self._bc, I, phi)


_TRANSFORMS: Dict[Tuple[int, int], tuple] = {}


def _transform(nf: NormalFormResult, order: Optional[int]) -> CoordinateTransform:
    order = nf.k if order is None else order
    key = (id(nf), order)
    hit = _TRANSFORMS.get(key)
    if hit is None or hit[0] is not nf:
        hit = (nf, CoordinateTransform(nf, order))
        _TRANSFORMS[key] = hit
    return hit[1]


def transform_state(nf: NormalFormResult, I, phi, order: Optional[int] = None,
                    inverse: bool = False):
    """Transformed state ``x~`` of ``x`` (or ``x`` of ``x~`` when ``inverse``)."""
    order = nf.k if order is None else order
    if order < 1:
        raise ValueError("order must be at least 1")
    tr = _transform(nf, order)
    single = np.ndim(I) == 1
    out = tr.to_old(I, phi) if inverse else tr.to_new(I, phi)
    if single:
        return out[0][0], out[1][0]
    return out


def _potential_mp(U: Potential, psi):
    import mpmath
    total = mpmath.mpf(0)
    for m, a, b in U.modes:
        ma = mpmath.mpf(a.numerator) / a.denominator
        mb = mpmath.mpf(b.numerator) / b.denominator
        total += 2 * (ma * mpmath.cos(m * psi) - mb * mpmath.sin(m * psi))
    return total


def hamiltonian_discrepancy(nf: NormalFormResult, I_new, phi_new,
                            order: Optional[int] = None, dps: int = 40) -> float:
    """``|H~(x~) - H0(x)|`` with ``x`` the inverse transform of ``x~``.

    ``H~ = h0 + sum_m f^(m,R) + f^(k-1)``.  Everything is evaluated with
    ``dps`` digits so that discrepancies far below double precision relative
    to ``H`` are resolved.
    """
    import mpmath
    from .algebra import evaluate_mp
    tr = _transform(nf, order)
    n = nf.n
    with mpmath.workdps(dps):
        I_old = [evaluate_mp(tr.backward[a], I_new, phi_new, dps).real for a in range(n)]
        phi_old = [mpmath.mpf(phi_new[a]) + evaluate_mp(tr.backward[n + a], I_new,
                                                         phi_new, dps).real
                   for a in range(n)]
        h_old = sum(x * x for x in I_old) / 2
        for i, U in enumerate(nf.chain.potentials):
            h_old += _potential_mp(U, phi_old[i + 1] - phi_old[i])
        h_new = evaluate_mp(nf.transformed_hamiltonian(), I_new, phi_new, dps).real
        return float(abs(h_new - h_old))


# -- serialization ----------------------------------------------------------------


def _sections(nf: NormalFormResult):
    yield "h0", nf.h0
    for j, f in enumerate(nf.resonant_layers):
        yield f"resonant {j}", f
    for j, f in enumerate(nf.generators):
        yield f"generator {j}", f
    yield "final", nf.final_f


def dumps_normal_form(nf: NormalFormResult, timestamp: Optional[str] = None) -> str:
    body = "".join(f"## {name}\n{dumps(f)}" for name, f in _sections(nf))
    header = {
        "n": nf.n,
        "k": nf.k,
        "nstar": nf.cutoff,
        "max_order": nf.max_order,
        "gamma": nf.chain.gamma,
        "potentials": [U.spec for U in nf.chain.potentials],
        "degenerate_allowed": nf.chain.degenerate_allowed,
        "timestamp": timestamp or time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "content_hash": hashlib.sha256(body.encode()).hexdigest(),
    }
    return "# normal-form " + json.dumps(header, sort_keys=True) + "\n" + body


def loads_normal_form(text: str) -> NormalFormResult:
    first, _, rest = text.partition("\n")
    if not first.startswith("# normal-form "):
        raise ValueError("missing normal-form manifest header")
    header = json.loads(first[len("# normal-form "):])
    if hashlib.sha256(rest.encode()).hexdigest() != header["content_hash"]:
        raise ValueError("content hash mismatch")
    chain = ChainSpec.build(header["n"], header["k"], header["gamma"],
                            header["potentials"], header["degenerate_allowed"])
    blocks: Dict[str, str] = {}
    name = None
    for line in rest.splitlines(keepends=True):
        if line.startswith("## "):
            name = line[3:].strip()
            blocks[name] = ""
        elif name is not None:
            blocks[name] += line
    k = header["k"]
    return NormalFormResult(
        chain=chain,
        h0=loads(blocks["h0"]),
        resonant_layers=[loads(blocks[f"resonant {j}"]) for j in range(k - 1)],
        generators=[loads(blocks[f"generator {j}"]) for j in range(k - 1)],
        final_f=loads(blocks["final"]),
        cutoff=header["nstar"],
        max_order=header.get("max_order"),
    )


__all__ = ["NormalFormState", "NormalFormResult", "P1Bundle", "CoordinateTransform",
           "build_initial", "run_iteration", "build_normal_form", "check_identities",
           "compute_p1_bundle", "transform_state", "hamiltonian_discrepancy", "support_window", "seeded_point",
           "antiderivative_series", "dumps_normal_form", "loads_normal_form", "MAX_K"]
