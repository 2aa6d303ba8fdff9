"""Finite Fourier series in the angles with exact rational coefficients.

Sites are numbered from 1 in every public function, matching the chain
convention; frequency vectors and forms are plain integer tuples.
"""

from __future__ import annotations

from math import factorial
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .coefficient import (
    Coef, Coefficient, Gauss, ONE, ZERO, c_conj, c_const, c_depends_on_I,
    c_directional, c_divide_form, c_monomial, c_mul, c_reduce, c_resign,
    c_scale, c_sites, c_sum, c_tagged, c_truncate, canonical_form,
    tagged_directional, tagged_mul_into, gauss, is_gzero, to_mpq,
)

FreqVector = Tuple[int, ...]

DEFAULT_TERM_BUDGET = 2_000_000


class TermBudgetExceeded(RuntimeError):
    """Raised when a symbolic result grows past the configured term cap."""


class FourierFunction:
    """Finite sum of ``f_mu(I) exp(i mu . phi)`` over integer vectors ``mu``.

    Parameters
    ----------
    n : int
        Number of sites.
    modes : mapping
        Frequency vector -> reduced coefficient.  Taken over without
        copying; treat instances as immutable.
    real : bool
        Whether the function is known to be real on real arguments.
    k : int, optional
        Resonant site (1-based) used to orient denominator forms.
    """

    __slots__ = ("n", "_modes", "real", "k")

    def __init__(self, n: int, modes: Optional[Dict[FreqVector, Coef]] = None,
                 real: bool = False, k: Optional[int] = None):
        self.n = int(n)
        self._modes = {} if modes is None else modes
        self.real = bool(real)
        self.k = k

    # -- inspection ---------------------------------------------------------

    def modes(self) -> Dict[FreqVector, Coefficient]:
        return {mu: Coefficient(c) for mu, c in sorted(self._modes.items())}

    def coefficient(self, mu: Sequence[int]) -> Coefficient:
        c = self._modes.get(tuple(mu))
        return Coefficient(c if c is not None else c_const(self.n, (ZERO, ZERO)))

    @property
    def n_terms(self) -> int:
        return sum(len(c) for c in self._modes.values())

    @property
    def n_modes(self) -> int:
        return len(self._modes)

    def is_syntactically_zero(self) -> bool:
        return not self._modes

    def max_mode(self) -> int:
        """Largest entry magnitude over all modes (``|N|`` in max-norm)."""
        return max((max(abs(v) for v in mu) for mu in self._modes), default=0)

    def forms(self) -> set:
        out = set()
        for c in self._modes.values():
            out.update(f for f, _ in c.den)
        return out

    def support(self) -> set:
        """1-based sites on which the function depends (angles or actions)."""
        out = set()
        for mu, c in self._modes.items():
            out.update(i for i, v in enumerate(mu) if v)
            out.update(c_sites(c))
        return {i + 1 for i in out}

    def is_resonant(self, k: int) -> bool:
        return all(mu[k - 1] == 0 for mu in self._modes)

    def is_nonresonant(self, k: int) -> bool:
        return all(mu[k - 1] != 0 for mu in self._modes)

    def check_real(self) -> bool:
        """Exact check of conjugate symmetry ``f_{-mu} = conj(f_mu)``."""
        for mu, c in self._modes.items():
            other = self._modes.get(tuple(-v for v in mu))
            if other is None or c_conj(c) != other:
                return False
        return True

    def __repr__(self) -> str:
        return (f"FourierFunction(n={self.n}, modes={self.n_modes}, "
                f"terms={self.n_terms}, real={self.real})")

    def __eq__(self, other) -> bool:
        """Syntactic equality of canonical representations."""
        if not isinstance(other, FourierFunction):
            return NotImplemented
        return self.n == other.n and self._modes == other._modes

    __hash__ = None

    # -- arithmetic sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, _lift(other, self.n))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, _lift(other, self.n), scale_g=gauss(-1))

    def __rsub__(self, other):
        return add(_lift(other, self.n), self, scale_g=gauss(-1))

    def __neg__(self):
        return scale(self, -1)

    def __mul__(self, other):
        if isinstance(other, FourierFunction):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return scale(self, ONE / to_mpq(other))


def _lift(x, n: int) -> FourierFunction:
    if isinstance(x, FourierFunction):
        return x
    return constant(n, x)


# -- constructors -------------------------------------------------------------


def zero(n: int) -> FourierFunction:
    return FourierFunction(n, {}, real=True)


def _as_gauss(c) -> Gauss:
    if isinstance(c, tuple):
        return gauss(*c)
    if isinstance(c, complex):
        raise TypeError("complex floats are not exact; pass (re, im) rationals")
    return gauss(c)


def constant(n: int, c=1) -> FourierFunction:
    g = _as_gauss(c)
    if is_gzero(g):
        return zero(n)
    return FourierFunction(n, {(0,) * n: c_const(n, g)}, real=not g[1])


def action(n: int, i: int, power: int = 1) -> FourierFunction:
    """The action ``I_i`` (1-based) raised to ``power`` as a function."""
    _check_site(n, i)
    mono = tuple(power if j == i - 1 else 0 for j in range(n))
    return FourierFunction(n, {(0,) * n: c_monomial(n, mono, (ONE, ZERO))}, real=True)


def inverse_form(n: int, nu: Sequence[int], power: int = 1,
                 k: Optional[int] = None) -> FourierFunction:
    """``(nu . I)^(-power)`` with the form canonicalized."""
    form, s = canonical_form(nu, None if k is None else k - 1)
    c = to_mpq(s) ** (-power)
    coef = c_monomial(n, (0,) * n, (c, ZERO), ((form, power),))
    return FourierFunction(n, {(0,) * n: coef}, real=True, k=k)


def kinetic(n: int) -> FourierFunction:
    """``sum_i I_i^2 / 2``."""
    half = to_mpq("1/2")
    parts = [c_monomial(n, tuple(2 if j == i else 0 for j in range(n)), (half, ZERO))
             for i in range(n)]
    return FourierFunction(n, {(0,) * n: c_sum(n, parts)}, real=True)


def trig(n: int, modes: Mapping[Sequence[int], object], real: Optional[bool] = None
         ) -> FourierFunction:
    """Function with constant coefficients ``{mu: c}``.

    ``c`` may be an int, Fraction, string or an ``(re, im)`` pair.
    """
    acc: Dict[FreqVector, Gauss] = {}
    for mu, c in modes.items():
        mu = tuple(int(v) for v in mu)
        if len(mu) != n:
            raise ValueError(f"mode {mu} has wrong length for n={n}")
        g = _as_gauss(c)
        old = acc.get(mu)
        acc[mu] = g if old is None else (g[0] + old[0], g[1] + old[1])
    out = {mu: c_const(n, g) for mu, g in acc.items() if not is_gzero(g)}
    f = FourierFunction(n, out)
    f.real = f.check_real() if real is None else real
    return f


def cos_mode(n: int, mu: Sequence[int], c=1) -> FourierFunction:
    """``c * cos(mu . phi)`` with rational ``c``."""
    mu = tuple(mu)
    h = to_mpq(c) / 2
    neg = tuple(-v for v in mu)
    if mu == neg:
        return constant(n, to_mpq(c))
    return trig(n, {mu: h, neg: h}, real=True)


def sin_mode(n: int, mu: Sequence[int], c=1) -> FourierFunction:
    """``c * sin(mu . phi)`` with rational ``c``."""
    mu = tuple(mu)
    h = to_mpq(c) / 2
    neg = tuple(-v for v in mu)
    return trig(n, {mu: (0, -h), neg: (0, h)}, real=True)


def bond(n: int, i: int, m: int = 1) -> FreqVector:
    """Frequency vector of ``m (phi_{i+1} - phi_i)`` for 1-based bond ``i``."""
    mu = [0] * n
    mu[i] = m
    mu[i - 1] = -m
    return tuple(mu)


# -- internal helpers ----------------------------------------------------------


def _check_site(n: int, i: int) -> None:
    if not 1 <= i <= n:
        raise IndexError(f"site {i} out of range 1..{n}")


def _check_dims(f: FourierFunction, g: FourierFunction) -> None:
    if f.n != g.n:
        raise ValueError(f"dimension mismatch: n={f.n} vs n={g.n}")


def with_k(f: FourierFunction, k: Optional[int]) -> FourierFunction:
    """Re-orient denominator forms of ``f`` for resonant site ``k``."""
    if f.k == k:
        return f
    pivot = None if k is None else k - 1
    modes = {}
    for mu, c in f._modes.items():
        modes[mu] = c_resign(c, pivot) if c.den else c
    return FourierFunction(f.n, modes, real=f.real, k=k)


def _align(f: FourierFunction, g: FourierFunction):
    _check_dims(f, g)
    if f.k == g.k:
        return f, g, f.k
    if f.k is None:
        return with_k(f, g.k), g, g.k
    if g.k is None:
        return f, with_k(g, f.k), f.k
    return with_k(f, None), with_k(g, None), None


def _finish(n: int, modes: Dict[FreqVector, list], real: bool, k,
            budget: Optional[int] = None, max_order: Optional[int] = None
            ) -> FourierFunction:
    """Sum the pending contributions of every mode and reduce."""
    clean = {}
    total = 0
    for mu, parts in modes.items():
        c = c_reduce(c_sum(n, parts))
        if max_order is not None:
            c = c_truncate(c, max_order)
        if not c.is_zero():
            clean[mu] = c
            total += len(c)
    cap = DEFAULT_TERM_BUDGET if budget is None else budget
    if total > cap:
        raise TermBudgetExceeded(f"{total} terms exceed the budget of {cap}")
    return FourierFunction(n, clean, real=real, k=k)


# -- ring operations -------------------------------------------------------------


def add(f: FourierFunction, g: FourierFunction, scale_g: Optional[Gauss] = None
        ) -> FourierFunction:
    """``f + scale_g * g`` (``scale_g`` defaults to 1)."""
    f, g, k = _align(f, g)
    modes = {mu: [c] for mu, c in f._modes.items()}
    for mu, c in g._modes.items():
        modes.setdefault(mu, []).append(c if scale_g is None else c_scale(c, scale_g))
    real = f.real and g.real and (scale_g is None or not scale_g[1])
    return _finish(f.n, modes, real, k)


def sub(f: FourierFunction, g: FourierFunction) -> FourierFunction:
    return add(f, g, scale_g=gauss(-1))


def scale(f: FourierFunction, s) -> FourierFunction:
    g = _as_gauss(s)
    if is_gzero(g):
        return FourierFunction(f.n, {}, real=True, k=f.k)
    modes = {mu: c_scale(c, g) for mu, c in f._modes.items()}
    return FourierFunction(f.n, modes, real=f.real and not g[1], k=f.k)


def total(functions: Iterable[FourierFunction], n: int) -> FourierFunction:
    out = zero(n)
    for f in functions:
        out = add(out, f)
    return out


def mul(f: FourierFunction, g: FourierFunction) -> FourierFunction:
    """Cauchy product over frequency vectors."""
    f, g, k = _align(f, g)
    modes: Dict[FreqVector, list] = {}
    for mu, a in f._modes.items():
        for nu, b in g._modes.items():
            s = tuple(x + y for x, y in zip(mu, nu))
            modes.setdefault(s, []).append(c_mul(a, b))
    return _finish(f.n, modes, f.real and g.real, k)


def conjugate(f: FourierFunction) -> FourierFunction:
    modes = {tuple(-v for v in mu): c_conj(c) for mu, c in f._modes.items()}
    return FourierFunction(f.n, modes, real=f.real, k=f.k)


# -- derivatives and brackets ----------------------------------------------------


def differentiate_phi(f: FourierFunction, i: int) -> FourierFunction:
    """``d f / d phi_i`` (1-based ``i``)."""
    _check_site(f.n, i)
    modes = {}
    for mu, c in f._modes.items():
        m = mu[i - 1]
        if m:
            modes[mu] = c_scale(c, (ZERO, to_mpq(m)))
    return FourierFunction(f.n, modes, real=f.real, k=f.k)


def differentiate_I(f: FourierFunction, i: int) -> FourierFunction:
    """``d f / d I_i`` (1-based ``i``) by the term-wise product rule."""
    _check_site(f.n, i)
    e = tuple(1 if j == i - 1 else 0 for j in range(f.n))
    modes = {mu: [c_directional(c, e)] for mu, c in f._modes.items()}
    return _finish(f.n, modes, f.real, f.k)


def poisson_bracket(f: FourierFunction, g: FourierFunction,
                    budget: Optional[int] = None, max_order: Optional[int] = None
                    ) -> FourierFunction:
    """``{f, g} = sum_i df/dphi_i dg/dI_i - df/dI_i dg/dphi_i``.

    With ``max_order`` set, coefficient parts decaying faster than
    ``|I|^-max_order`` are dropped (see :func:`truncate`).
    """
    f, g, k = _align(f, g)
    n = f.n
    # For modes mu of f (coefficient a) and nu of g (coefficient b) the
    # contribution to mode mu+nu is i (a D_mu b - b D_nu a), D the
    # directional derivative in the actions.  Derivatives raise the decay
    # order by one, so pairs beyond max_order are skipped before any work.
    ft = {mu: c_tagged(a) for mu, a in f._modes.items()}
    gt = {nu: c_tagged(b) for nu, b in g._modes.items()}
    f_dep = {mu: c_depends_on_I(a) for mu, a in f._modes.items()}
    g_dep = {nu: c_depends_on_I(b) for nu, b in g._modes.items()}
    lim = max_order
    modes: Dict[FreqVector, dict] = {}
    for nu, pb in gt.items():
        ob = pb[0][0]
        for mu, pa in ft.items():
            oa = pa[0][0]
            if lim is not None and oa + ob + 1 > lim:
                continue
            s = tuple(x + y for x, y in zip(mu, nu))
            if g_dep[nu] and any(mu):
                db = tagged_directional(pb, mu, None if lim is None else lim - oa)
                if db:
                    db.sort(key=lambda t: t[0])
                    tagged_mul_into(modes.setdefault(s, {}), pa, db, lim, 1)
            if f_dep[mu] and any(nu):
                da = tagged_directional(pa, nu, None if lim is None else lim - ob)
                if da:
                    da.sort(key=lambda t: t[0])
                    tagged_mul_into(modes.setdefault(s, {}), pb, da, lim, 3)
    pending = {mu: [Coef(n, {d: tuple(v) for d, v in acc.items()})]
               for mu, acc in modes.items()}
    return _finish(n, pending, f.real and g.real, k, budget, max_order)


def truncate(f: FourierFunction, max_order: int) -> FourierFunction:
    """Drop coefficient parts whose conservative decay order exceeds ``max_order``.

    The order of a part is its denominator degree minus its numerator degree.
    On a domain where every denominator form is of size ``L`` the dropped
    parts are ``O(L^-(max_order+1))``.
    """
    modes = {}
    for mu, c in f._modes.items():
        c = c_truncate(c, max_order)
        if not c.is_zero():
            modes[mu] = c
    return FourierFunction(f.n, modes, real=f.real, k=f.k)


def angle_bracket(i: int, g: FourierFunction) -> FourierFunction:
    """``{phi_i, g} = dg/dI_i`` for the coordinate angle ``phi_i``."""
    return differentiate_I(g, i)


def split_resonant(f: FourierFunction, k: int):
    """Return ``(f_R, f_NR)``: modes with ``mu_k == 0`` and the rest."""
    _check_site(f.n, k)
    res, non = {}, {}
    for mu, c in f._modes.items():
        (non if mu[k - 1] else res)[mu] = c
    return (FourierFunction(f.n, res, real=f.real, k=f.k),
            FourierFunction(f.n, non, real=f.real, k=f.k))


def apply_Q(f: FourierFunction, k: int) -> FourierFunction:
    """``Qf = -i sum_{mu_k != 0} f_mu(I) / (I . mu) exp(i mu . phi)``."""
    _check_site(f.n, k)
    f = with_k(f, k)
    pivot = k - 1
    modes = {}
    for mu, c in f._modes.items():
        if not mu[pivot]:
            continue
        form, s = canonical_form(mu, pivot)
        modes[mu] = [c_divide_form(c, form, (ZERO, -ONE / s))]
    return _finish(f.n, modes, f.real, k)


def lie_series(f: FourierFunction, chi: FourierFunction, l0: int = 0,
               l1: int = 1, weights: Optional[Sequence] = None,
               budget: Optional[int] = None, max_order: Optional[int] = None
               ) -> FourierFunction:
    """``sum_{l=l0}^{l1} (w_l / l!) ad_chi^l f`` with ``ad_chi f = {f, chi}``.

    ``weights`` is indexed from ``l0``; it defaults to all ones.
    """
    if l0 < 0 or l1 < l0:
        raise ValueError("need 0 <= l0 <= l1")
    if weights is not None and len(weights) != l1 - l0 + 1:
        raise ValueError("weights must have l1 - l0 + 1 entries")
    _check_dims(f, chi)
    out = FourierFunction(f.n, {}, real=True, k=f.k)
    term = f
    for ell in range(l1 + 1):
        if ell > 0:
            term = poisson_bracket(term, chi, budget, max_order)
        if term.is_syntactically_zero():
            break
        if ell >= l0:
            w = 1 if weights is None else weights[ell - l0]
            w = _as_gauss(w)
            w = (w[0] / factorial(ell), w[1] / factorial(ell))
            out = add(out, term, scale_g=w)
            if out.n_terms > (DEFAULT_TERM_BUDGET if budget is None else budget):
                raise TermBudgetExceeded("Lie series result exceeds the term budget")
    if out.is_syntactically_zero():
        out.k = f.k if f.k is not None else chi.k
    return out


def truncated_exp(f: FourierFunction, chi: FourierFunction, order: int,
                  budget: Optional[int] = None) -> FourierFunction:
    """``sum_{l=0}^{order} ad_chi^l f / l!``."""
    return lie_series(f, chi, 0, order, budget=budget)


__all__ = [
    "FourierFunction", "FreqVector", "TermBudgetExceeded", "DEFAULT_TERM_BUDGET",
    "zero", "constant", "action", "inverse_form", "kinetic", "trig", "cos_mode",
    "sin_mode", "bond", "with_k", "add", "sub", "scale", "total", "mul",
    "conjugate", "differentiate_phi", "differentiate_I", "poisson_bracket",
    "angle_bracket", "truncate", "split_resonant", "apply_Q", "lie_series", "truncated_exp",
]
