"""Spot checks of the analytic-norm inequalities on random Fourier functions.

The norm is the sup over ``|I_i - L delta_ik| < r L``, ``|Im phi_i| < sigma``.
Left-hand sides are sampled on the distinguished boundary, so they can only
under-estimate the true norm.  Right-hand sides use the majorant

    ||f|| <= sum_mu sup_I |f_mu(I)| exp(sigma |mu|_1),

which is exact for the coefficient part (for ``c0 + c . I`` the polydisc sup
is ``|c0 + c_k L| + r L sum |c_i|``) and can only over-estimate.  A sampled
left side above a majorant right side is therefore a genuine violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..algebra import (DomainSpec, FourierFunction, action, add, apply_Q, constant,
                       lie_series, mul, poisson_bracket, scale, split_resonant,
                       sup_norm_estimate, trig, with_k)
from .report import Report, Table

Mode = Tuple[int, ...]


@dataclass(frozen=True)
class RandomFunction:
    """``sum_mu (c0_mu + sum_i c_mu,i I_i) exp(i mu . phi)`` with rational ``c``."""

    n: int
    k: int
    modes: Tuple[Tuple[Mode, Fraction, Tuple[Fraction, ...]], ...]

    @property
    def max_mode(self) -> int:
        return max(max(abs(v) for v in mu) for mu, _, _ in self.modes)

    def function(self) -> FourierFunction:
        n = self.n
        out = FourierFunction(n, {}, real=False, k=self.k)
        for mu, c0, lin in self.modes:
            coef = constant(n, c0)
            for i, c in enumerate(lin, start=1):
                if c:
                    coef = add(coef, scale(action(n, i), c))
            out = add(out, mul(coef, trig(n, {mu: 1}, real=False)))
        return with_k(out, self.k)

    def majorant(self, L: float, r: float, sigma: float) -> float:
        """Upper bound of the sup norm on the domain."""
        total = 0.0
        for mu, c0, lin in self.modes:
            coef = abs(float(c0) + float(lin[self.k - 1]) * L) + r * L * sum(abs(float(c))
                                                                            for c in lin)
            total += coef * math.exp(sigma * sum(abs(v) for v in mu))
        return total

    def scaled(self, s: Fraction) -> "RandomFunction":
        return RandomFunction(self.n, self.k, tuple(
            (mu, c0 * s, tuple(c * s for c in lin)) for mu, c0, lin in self.modes))


def _rational(rng: np.random.Generator) -> Fraction:
    q = int(rng.integers(1, 9))
    return Fraction(int(rng.integers(-q, q + 1)), q)


def random_function(rng: np.random.Generator, n: int, k: int, max_mode: int = 3,
                    max_terms: int = 4, linear: bool = True) -> RandomFunction:
    """Seeded random function with at least one mode that has ``mu_k != 0``."""
    count = int(rng.integers(1, max_terms + 1))
    modes: Dict[Mode, Tuple[Fraction, Tuple[Fraction, ...]]] = {}
    while len(modes) < count:
        mu = tuple(int(v) for v in rng.integers(-max_mode, max_mode + 1, n))
        if not modes and mu[k - 1] == 0:
            mu = mu[:k - 1] + (int(rng.choice([-1, 1])) * int(rng.integers(1, max_mode + 1)),) + mu[k:]
        c0 = _rational(rng)
        lin = tuple(_rational(rng) if linear and rng.random() < 0.5 else Fraction(0)
                    for _ in range(n))
        if c0 == 0 and not any(lin):
            c0 = Fraction(1)
        modes[mu] = (c0, lin)
    return RandomFunction(n, k, tuple((mu, c0, lin) for mu, (c0, lin) in sorted(modes.items())))


def _sampled(f: FourierFunction, L: float, r: float, sigma: float, k: int,
             budget: int) -> float:
    # radius guard only matters where denominators exist
    return sup_norm_estimate(f, DomainSpec(L, r, sigma), budget=budget, k=k,
                             check_radius=bool(f.forms()))


def _check(rows: list, name: str, seed: int, L: float, lhs: float, rhs: float):
    rows.append([name, seed, L, lhs, rhs, lhs / rhs if rhs > 0 else math.inf,
                 int(lhs <= rhs * (1 + 1e-12))])


def bound_checks_for_seed(seed: int, L_values: Sequence[float], sigma: float = 1.0,
                          budget: int = 2048, max_ell: int = 3) -> List[list]:
    """All inequality rows for one seed.

    Row layout: ``[inequality, seed, L, lhs, rhs, ratio, holds]``.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    k = int(rng.integers(1, n + 1))
    f = random_function(rng, n, k)
    f2 = random_function(rng, n, k)
    g = random_function(rng, n, k)
    N = max(f.max_mode, f2.max_mode, g.max_mode)
    r = 0.9 / (2 * n * N)
    rp, sp = r / 2, sigma / 2
    F, F2, G = f.function(), f2.function(), g.function()
    rows: List[list] = []
    for L in L_values:
        nf_ = f.majorant(L, r, sigma)
        # Q bound
        Qf = apply_Q(F, k)
        _check(rows, "Q", seed, L, _sampled(Qf, L, r, sp, k, budget),
               2 * (4 / (sigma - sp)) ** n * nf_ / L)
        # bracket bound
        br = poisson_bracket(F, F2)
        _check(rows, "bracket", seed, L, _sampled(br, L, rp, sp, k, budget),
               2 * n / (L * (r - rp) * (sigma - sp)) * nf_ * f2.majorant(L, r, sigma))
        # ad^l bound
        ng = g.majorant(L, r, sigma)
        term = F
        for ell in range(1, max_ell + 1):
            term = poisson_bracket(term, G)
            rhs = (4 * n * ell / (L * (r - rp) * (sigma - sp))) ** ell * ng ** ell * nf_
            _check(rows, f"ad^{ell}", seed, L, _sampled(term, L, rp, sp, k, budget), rhs)
        # Lie-sum bound: the generator is scaled so that q <= 1/2
        gc = g
        pref = 4 * n * math.e / ((sigma - sp) * (r - rp))
        q = pref * gc.majorant(L, r, sigma) / L
        if q > 0.5:
            gc = gc.scaled(Fraction(0.5 / q) * Fraction(99, 100))
        q = pref * gc.majorant(L, r, sigma) / L
        Gc = gc.function()
        for l0 in range(0, 3):
            s = lie_series(F, Gc, l0, max_ell)
            _check(rows, f"lie_sum l0={l0}", seed, L, _sampled(s, L, rp, sp, k, budget),
                   2 * q ** l0 * nf_)
        # restriction bound
        R, NR = split_resonant(F, k)
        for name, part in (("restriction R", R), ("restriction NR", NR)):
            _check(rows, name, seed, L, _sampled(part, L, r, sp, k, budget),
                   (4 / (sigma - sp)) ** n * nf_)
    return rows


def norm_bound_checks(seeds: Sequence[int] = tuple(range(100)),
                          L_values: Sequence[float] = (1e2, 1e3), sigma: float = 1.0,
                          budget: int = 2048) -> Report:
    """Every inequality for every seed and ``L``; the report fails on any violation."""
    rows: List[list] = []
    for seed in seeds:
        rows.extend(bound_checks_for_seed(seed, L_values, sigma, budget))
    rep = Report("bounds", params={"seeds": len(seeds), "L_values": list(L_values),
                                   "sigma": sigma, "budget": budget})
    rep.tables["bounds"] = Table(["inequality", "seed", "L", "lhs", "rhs", "ratio", "holds"],
                                 rows)
    by_name: Dict[str, list] = {}
    for row in rows:
        by_name.setdefault(row[0], []).append(row)
    tight = {}
    for name, rs in by_name.items():
        bad = [r for r in rs if not r[6]]
        tight[name] = max(r[5] for r in rs)
        rep.check(f"{name}: no violations", not bad, len(bad), 0,
                  detail="" if not bad else f"first at seed {bad[0][1]}, L={bad[0][2]:g}")
    rep.results.update({"max_ratio": tight, "evaluations": len(rows)})
    return rep


__all__ = ["RandomFunction", "random_function", "bound_checks_for_seed",
           "norm_bound_checks"]
