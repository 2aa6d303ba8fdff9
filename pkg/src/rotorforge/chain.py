"""Chain specification: potentials, assumption checks, energy and forces."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from gmpy2 import mpq

from .algebra import FourierFunction, bond, kinetic, total, trig

PRESETS = {
    "cosine": {1: (Fraction(-1, 2), Fraction(0))},
    # (cos psi - 1)^2 / 2 = 3/4 - cos psi + cos(2 psi)/4, constant dropped
    "degenerate_quartic": {1: (Fraction(-1, 2), Fraction(0)),
                           2: (Fraction(1, 8), Fraction(0))},
}

_RAT = r"[-+]?\d+(?:/\d+)?"
_ENTRY = re.compile(
    rf"^\s*(-?\d+)\s*:\s*({_RAT})\s*(?:([+-])\s*({_RAT.replace('[-+]?', '')})\s*i)?\s*$")


@dataclass(frozen=True)
class Potential:
    """Single-angle potential ``sum_m c_m exp(i m psi) + conj``, ``m >= 1``."""

    modes: Tuple[Tuple[int, Fraction, Fraction], ...]
    spec: str = ""

    @classmethod
    def from_modes(cls, modes: Dict[int, object], spec: str = "") -> "Potential":
        rows = []
        for m, c in sorted(modes.items()):
            if isinstance(c, tuple):
                re_, im_ = Fraction(c[0]), Fraction(c[1])
            else:
                re_, im_ = Fraction(c), Fraction(0)
            if m == 0:
                raise ValueError("constant mode is not allowed in a potential")
            if m < 0:
                raise ValueError("harmonics must be positive integers")
            if re_ or im_:
                rows.append((int(m), re_, im_))
        return cls(tuple(rows), spec or _format_modes(rows))

    @property
    def max_harmonic(self) -> int:
        return max((m for m, _, _ in self.modes), default=0)

    def series(self, order: int = 0) -> Dict[int, Tuple[Fraction, Fraction]]:
        """Two-sided Fourier coefficients of the ``order``-th derivative."""
        out = {}
        for m, a, b in self.modes:
            for mm, (re_, im_) in ((m, (a, b)), (-m, (a, -b))):
                # multiply by (i mm)^order
                cr, ci = re_, im_
                for _ in range(order):
                    cr, ci = -ci * mm, cr * mm
                if cr or ci:
                    out[mm] = (cr, ci)
        return out

    def on_angle(self, n: int, mu_unit: Sequence[int], order: int = 0) -> FourierFunction:
        """The ``order``-th derivative evaluated at the angle ``mu_unit . phi``."""
        modes = {}
        for m, c in self.series(order).items():
            modes[tuple(m * v for v in mu_unit)] = c
        return trig(n, modes, real=True)

    def on_bond(self, n: int, i: int, order: int = 0) -> FourierFunction:
        """``U^(order)(phi_{i+1} - phi_i)`` as a Fourier function."""
        return self.on_angle(n, bond(n, i), order)

    def arrays(self):
        """Harmonics and real/imaginary parts as float arrays."""
        m = np.array([r[0] for r in self.modes], dtype=float)
        a = np.array([float(r[1]) for r in self.modes])
        b = np.array([float(r[2]) for r in self.modes])
        return m, a, b

    def __call__(self, psi, order: int = 0):
        """Numerical value of the ``order``-th derivative (order 0, 1 or 2)."""
        psi = np.asarray(psi, dtype=float)
        out = np.zeros_like(psi)
        for m, a, b in self.modes:
            a = float(a)
            b = float(b)
            c, s = np.cos(m * psi), np.sin(m * psi)
            if order == 0:
                out = out + 2 * (a * c - b * s)
            elif order == 1:
                out = out - 2 * m * (a * s + b * c)
            elif order == 2:
                out = out - 2 * m * m * (a * c - b * s)
            else:
                raise ValueError("order must be 0, 1 or 2")
        return out


def _fmt_rat(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _format_modes(rows) -> str:
    parts = []
    for m, a, b in rows:
        s = f"{m}: {_fmt_rat(a)}"
        if b:
            s += f" + {_fmt_rat(b)} i"
        parts.append(s)
    return ", ".join(parts)


def parse_potential(spec: str) -> Potential:
    """Parse ``cosine``, ``degenerate_quartic`` or ``m: a/b [+ c/d i], ...``."""
    text = spec.strip()
    if text in PRESETS:
        return Potential.from_modes(PRESETS[text], spec=text)
    if text in ("zero", "0"):
        return Potential((), spec="zero")
    modes: Dict[int, Tuple[Fraction, Fraction]] = {}
    for entry in text.split(","):
        match = _ENTRY.match(entry)
        if not match:
            raise ValueError(f"malformed potential entry {entry.strip()!r}")
        m = int(match.group(1))
        if m == 0:
            raise ValueError("constant mode is not allowed in a potential")
        if m < 0:
            raise ValueError(f"harmonic {m} must be positive")
        if m in modes:
            raise ValueError(f"harmonic {m} listed twice")
        try:
            re_ = Fraction(match.group(2))
            im_ = Fraction(0)
            if match.group(3):
                im_ = Fraction(match.group(4))
                if match.group(3) == "-":
                    im_ = -im_
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed rational in {entry.strip()!r}") from exc
        modes[m] = (re_, im_)
    return Potential.from_modes(modes, spec=text)


# -- non-degeneracy ---------------------------------------------------------------

Poly = List[Tuple[mpq, mpq]]  # coefficients, highest degree first


def _q(x: Fraction) -> mpq:
    return mpq(x.numerator, x.denominator)


def _trim(p: Poly) -> Poly:
    i = 0
    while i < len(p) and not p[i][0] and not p[i][1]:
        i += 1
    return p[i:]


def _gdiv(a, b):
    den = b[0] * b[0] + b[1] * b[1]
    return ((a[0] * b[0] + a[1] * b[1]) / den, (a[1] * b[0] - a[0] * b[1]) / den)


def _gmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _poly_rem(a: Poly, b: Poly) -> Poly:
    a = list(a)
    while len(a) >= len(b):
        q = _gdiv(a[0], b[0])
        for i in range(len(b)):
            t = _gmul(q, b[i])
            a[i] = (a[i][0] - t[0], a[i][1] - t[1])
        a = _trim(a[1:] if not a[0][0] and not a[0][1] else a)
        if not a:
            break
    return a


def _poly_gcd(a: Poly, b: Poly) -> Poly:
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _poly_rem(a, b)
    if not a:
        return a
    lead = a[0]
    return [_gdiv(c, lead) for c in a]


def _poly_deriv(p: Poly) -> Poly:
    d = len(p) - 1
    return [(c[0] * (d - i), c[1] * (d - i)) for i, c in enumerate(p[:-1])]


def _poly_div_exact(a: Poly, b: Poly) -> Poly:
    a = list(a)
    out = []
    while len(a) >= len(b):
        q = _gdiv(a[0], b[0])
        out.append(q)
        for i in range(len(b)):
            t = _gmul(q, b[i])
            a[i] = (a[i][0] - t[0], a[i][1] - t[1])
        a = a[1:]
    return out


def _laurent_to_poly(series: Dict[int, Tuple[Fraction, Fraction]], M: int) -> Poly:
    """``z^M * sum_m c_m z^m`` with integer (Gaussian) coefficients."""
    coeffs = [series.get(j - M, (Fraction(0), Fraction(0))) for j in range(2 * M, -1, -1)]
    den = 1
    for a, b in coeffs:
        den = lcm(den, a.denominator, b.denominator)
    return [(mpq(int(a * den)), mpq(int(b * den))) for a, b in coeffs]


@dataclass(frozen=True)
class DegeneracyReport:
    nondegenerate: bool
    witness: Optional[float]
    gcd_degree: int

    def __bool__(self) -> bool:
        return self.nondegenerate


def check_nondegenerate(U: Potential) -> DegeneracyReport:
    """Decide whether ``U'`` and ``U''`` have a common zero on the circle.

    With ``z = exp(i psi)`` both derivatives become Laurent polynomials; after
    multiplying by ``z^M`` their exact gcd is computed over the Gaussian
    rationals.  Its square-free part is then solved numerically and any root
    with ``||z| - 1| < 1e-9`` is a common zero, reported as ``arg z``.
    """
    M = U.max_harmonic
    if M == 0:
        return DegeneracyReport(False, 0.0, -1)
    A = _laurent_to_poly(U.series(1), M)
    B = _laurent_to_poly(U.series(2), M)
    g = _poly_gcd(A, B)
    deg = len(g) - 1
    if deg <= 0:
        return DegeneracyReport(True, None, max(deg, 0))
    dg = _poly_gcd(g, _poly_deriv(g))
    sqfree = _poly_div_exact(g, dg) if len(dg) > 1 else g
    coeffs = np.array([complex(float(a), float(b)) for a, b in sqfree])
    roots = np.roots(coeffs) if len(coeffs) > 1 else np.array([])
    for z in roots:
        if abs(abs(z) - 1.0) < 1e-9:
            psi = float(np.angle(z))
            return DegeneracyReport(False, psi + 0.0, deg)
    return DegeneracyReport(True, None, deg)


# -- chain ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainSpec:
    """Rotator chain with ``n`` sites, resonant site ``k`` and damping ``gamma``."""

    n: int
    k: int
    gamma: float
    potentials: Tuple[Potential, ...]
    degenerate_allowed: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 2 <= self.k <= self.n:
            raise ValueError(f"k = {self.k} must satisfy 2 <= k <= n = {self.n}")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if len(self.potentials) != self.n - 1:
            raise ValueError(f"need n - 1 = {self.n - 1} potentials, got {len(self.potentials)}")
        if not self.degenerate_allowed:
            for i, U in enumerate(self.potentials, start=1):
                rep = check_nondegenerate(U)
                if not rep:
                    raise AssumptionViolation(
                        f"potential U_{i} = {U.spec!r} is degenerate: U' and U'' "
                        f"vanish together at psi = {rep.witness:.6g}")

    @classmethod
    def build(cls, n: int, k: int, gamma: float, potentials, degenerate_allowed=False):
        """Accept potential specs as strings; a single spec applies to every bond."""
        if isinstance(potentials, (str, Potential)):
            potentials = [potentials] * (n - 1)
        pots = tuple(p if isinstance(p, Potential) else parse_potential(p)
                     for p in potentials)
        return cls(n, k, float(gamma), pots, degenerate_allowed)

    def with_gamma(self, gamma: float) -> "ChainSpec":
        return ChainSpec(self.n, self.k, float(gamma), self.potentials, self.degenerate_allowed)

    def potential_arrays(self):
        """Padded arrays (harmonic, Re c, Im c) of shape (n-1, max modes)."""
        width = max(1, max(len(U.modes) for U in self.potentials))
        m = np.zeros((self.n - 1, width))
        a = np.zeros((self.n - 1, width))
        b = np.zeros((self.n - 1, width))
        for i, U in enumerate(self.potentials):
            mi, ai, bi = U.arrays()
            m[i, :len(mi)] = mi
            a[i, :len(ai)] = ai
            b[i, :len(bi)] = bi
        return m, a, b

    def hamiltonian_function(self) -> FourierFunction:
        """``h0 + f0`` as an exact Fourier function."""
        return total([kinetic(self.n)] + [U.on_bond(self.n, i)
                                          for i, U in enumerate(self.potentials, 1)],
                     self.n)


class AssumptionViolation(ValueError):
    """A potential fails the non-degeneracy assumption."""


@dataclass
class State:
    """Actions and angles; angles may be unreduced (winding is allowed)."""

    I: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.I = np.asarray(self.I, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.I.shape != self.phi.shape:
            raise ValueError("I and phi must have the same shape")

    def reduced(self) -> "State":
        return State(self.I.copy(), np.mod(self.phi, 2 * np.pi))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.I, self.phi])


def _bond_angles(phi: np.ndarray) -> np.ndarray:
    return phi[..., 1:] - phi[..., :-1]


def hamiltonian(chain: ChainSpec, s: State):
    """``sum I_i^2/2 + sum U_i(phi_{i+1} - phi_i)`` (batched over leading axes)."""
    I, phi = np.asarray(s.I), np.asarray(s.phi)
    d = _bond_angles(phi)
    pot = sum(U(d[..., i]) for i, U in enumerate(chain.potentials))
    return 0.5 * np.sum(I * I, axis=-1) + pot


def forces(chain: ChainSpec, s: State) -> np.ndarray:
    """``F = -dH/dphi``, i.e. ``F_i = U'_i(phi_{i+1} - phi_i) - U'_{i-1}(phi_i - phi_{i-1})``."""
    phi = np.asarray(s.phi, dtype=float)
    d = _bond_angles(phi)
    up = np.stack([U(d[..., i], 1) for i, U in enumerate(chain.potentials)], axis=-1)
    zero = np.zeros(up.shape[:-1] + (1,))
    return np.concatenate([up, zero], axis=-1) - np.concatenate([zero, up], axis=-1)


__all__ = ["Potential", "parse_potential", "check_nondegenerate", "DegeneracyReport",
           "ChainSpec", "State", "hamiltonian", "forces", "AssumptionViolation",
           "PRESETS"]
