"""Exact coefficient arithmetic for action-dependent Fourier coefficients.

A coefficient is a finite sum of parts

    (P(I) + i R(I)) / prod_j (nu_j . I)^{p_j}

with ``P`` and ``R`` multivariate polynomials over the rationals (held as
``flint.fmpq_mpoly``) and ``nu_j`` primitive integer linear forms.  Parts
with the same denominator are merged, and :func:`c_reduce` cancels any form
that divides a part's numerator.  Different denominators are not brought
together: the forms are linearly dependent, so a single common denominator
grows much faster than the sum of the parts.  :func:`c_is_zero` does that
expansion only when an exact vanishing test needs it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Dict, Iterable, Iterator, Sequence, Tuple

import flint
from gmpy2 import mpq

Gauss = Tuple[mpq, mpq]
Form = Tuple[int, ...]
Dens = Tuple[Tuple[Form, int], ...]
Key = Tuple[Tuple[int, ...], Dens]

ZERO = mpq(0)
ONE = mpq(1)


def to_mpq(x) -> mpq:
    """Convert an int, Fraction, mpq, fmpq or ``"p/q"`` string to mpq exactly."""
    if isinstance(x, type(ZERO)):
        return x
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, (int, str)):
        return mpq(x)
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a Fraction or string")
    if isinstance(x, flint.fmpq):
        return mpq(int(x.p), int(x.q))
    return mpq(x)


def _fq(x: mpq) -> flint.fmpq:
    return flint.fmpq(int(x.numerator), int(x.denominator))


def gauss(re=0, im=0) -> Gauss:
    return (to_mpq(re), to_mpq(im))


def gmul(a: Gauss, b: Gauss) -> Gauss:
    ar, ai = a
    br, bi = b
    if not ai and not bi:
        return (ar * br, ZERO)
    return (ar * br - ai * bi, ar * bi + ai * br)


def gconj(a: Gauss) -> Gauss:
    return (a[0], -a[1])


def is_gzero(a: Gauss) -> bool:
    return not a[0] and not a[1]


# -- linear forms ----------------------------------------------------------


def canonical_form(nu: Iterable[int], pivot: int | None = None) -> Tuple[Form, int]:
    """Return ``(form, scale)`` with ``nu = scale * form`` and form canonical.

    The form is primitive.  Its sign makes the entry at ``pivot`` (0-based)
    positive when that entry is nonzero, otherwise the first nonzero entry.
    """
    nu = tuple(int(v) for v in nu)
    g = 0
    for v in nu:
        g = gcd(g, v)
    if g == 0:
        raise ZeroDivisionError("linear form is identically zero")
    if pivot is not None and nu[pivot] != 0:
        lead = nu[pivot]
    else:
        lead = next(v for v in nu if v != 0)
    if lead < 0:
        g = -g
    return tuple(v // g for v in nu), g


def merge_dens(d1: Dens, d2: Dens) -> Dens:
    if not d1:
        return d2
    if not d2:
        return d1
    out = dict(d1)
    for f, p in d2:
        out[f] = out.get(f, 0) + p
    return tuple(sorted(out.items()))


# -- polynomial context ------------------------------------------------------


@lru_cache(maxsize=None)
def context(n: int):
    return flint.fmpq_mpoly_ctx.get(("I", n), "lex")


@lru_cache(maxsize=None)
def _zero_poly(n: int):
    return context(n).from_dict({})


@lru_cache(maxsize=1 << 16)
def form_poly(form: Form, power: int = 1):
    """``(form . I)^power`` as a polynomial."""
    n = len(form)
    if power == 0:
        return context(n).constant(1)
    if power > 1:
        return form_poly(form, 1) ** power
    return context(n).from_dict({
        tuple(1 if j == i else 0 for j in range(n)): v
        for i, v in enumerate(form) if v})


class Rat:
    """One coefficient: a sum of numerator pairs over denominator signatures.

    ``parts`` maps a sorted tuple of ``(form, power)`` to ``[re, im]``
    numerator polynomials.  Treat instances as immutable.
    """

    __slots__ = ("n", "parts")

    def __init__(self, n: int, parts: Dict[Dens, tuple]):
        self.n = n
        self.parts = parts

    def is_zero(self) -> bool:
        """Syntactic emptiness; see :func:`c_is_zero` for the exact test."""
        return all(re.is_zero() and im.is_zero() for re, im in self.parts.values())

    def __len__(self) -> int:
        """Number of numerator monomials summed over the parts."""
        return sum(len(set(re.monoms()) | set(im.monoms()))
                   for re, im in self.parts.values())

    @property
    def den(self) -> Dens:
        """Least common denominator of the parts."""
        top: Dict[Form, int] = {}
        for den in self.parts:
            for f, p in den:
                if p > top.get(f, 0):
                    top[f] = p
        return tuple(sorted(top.items()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rat):
            return NotImplemented
        if self.n != other.n or self.parts.keys() != other.parts.keys():
            return False
        return all(a[0] == b[0] and a[1] == b[1]
                   for d, a in self.parts.items() for b in [other.parts[d]])

    __hash__ = None

    def __repr__(self) -> str:
        return f"Rat({len(self.parts)} parts, {len(self)} numerator terms)"


Coef = Rat


def c_zero(n: int) -> Rat:
    return Rat(n, {})


def c_const(n: int, g: Gauss) -> Rat:
    if is_gzero(g):
        return c_zero(n)
    ctx = context(n)
    return Rat(n, {(): (ctx.constant(_fq(g[0])), ctx.constant(_fq(g[1])))})


def c_monomial(n: int, mono: Sequence[int], g: Gauss, den: Dens = ()) -> Rat:
    if is_gzero(g):
        return c_zero(n)
    ctx = context(n)
    mono = tuple(mono)
    re = ctx.from_dict({mono: _fq(g[0])}) if g[0] else _zero_poly(n)
    im = ctx.from_dict({mono: _fq(g[1])}) if g[1] else _zero_poly(n)
    return Rat(n, {tuple(sorted(den)): (re, im)})


def c_from_terms(n: int, terms: Iterable[Tuple[Key, Gauss]]) -> Rat:
    """Sum of ``c * I^mono / prod(forms)`` terms, reduced."""
    return c_reduce(c_sum(n, [c_monomial(n, mono, g, dens)
                              for (mono, dens), g in terms]))


# -- coefficient operations -----------------------------------------------


def _scale_pair(re, im, s: Gauss):
    sr, si = s
    fr = _fq(sr)
    if not si:
        return re * fr, im * fr
    fi = _fq(si)
    if not sr:
        return -(im * fi), re * fi
    return re * fr - im * fi, re * fi + im * fr


def c_scale(c: Rat, s: Gauss) -> Rat:
    if is_gzero(s):
        return c_zero(c.n)
    return Rat(c.n, {d: _scale_pair(re, im, s) for d, (re, im) in c.parts.items()})


def _mul_pair(ar, ai, br, bi, n):
    a_im = not ai.is_zero()
    b_im = not bi.is_zero()
    if not a_im and not b_im:
        return ar * br, _zero_poly(n)
    if not a_im:
        return ar * br, ar * bi
    if not b_im:
        return ar * br, ai * br
    return ar * br - ai * bi, ar * bi + ai * br


def c_mul(a: Rat, b: Rat, max_order: int | None = None) -> Rat:
    """Product; not reduced.

    With ``max_order`` set, pairs of parts whose orders add up to more than
    ``max_order`` are skipped (see :func:`part_order`).
    """
    n = a.n
    out: Dict[Dens, list] = {}
    if max_order is None:
        for da, (ar, ai) in a.parts.items():
            for db, (br, bi) in b.parts.items():
                re, im = _mul_pair(ar, ai, br, bi, n)
                _acc(out, merge_dens(da, db), re, im)
        return Rat(n, {d: tuple(v) for d, v in out.items()})
    pa = [(part_order(d, *v), d, v) for d, v in a.parts.items()]
    pb = [(part_order(d, *v), d, v) for d, v in b.parts.items()]
    for oa, da, (ar, ai) in pa:
        for ob, db, (br, bi) in pb:
            if oa + ob > max_order:
                continue
            re, im = _mul_pair(ar, ai, br, bi, n)
            _acc(out, merge_dens(da, db), re, im)
    return Rat(n, {d: tuple(v) for d, v in out.items()})


def _acc(out: Dict[Dens, list], den: Dens, re, im) -> None:
    slot = out.get(den)
    if slot is None:
        out[den] = [re, im]
    else:
        slot[0] = slot[0] + re
        slot[1] = slot[1] + im


def c_sum(n: int, items: Sequence[Rat]) -> Rat:
    """Sum of coefficients, merged part by part; not reduced."""
    if len(items) == 1:
        return items[0]
    out: Dict[Dens, list] = {}
    for c in items:
        for d, (re, im) in c.parts.items():
            _acc(out, d, re, im)
    return Rat(n, {d: tuple(v) for d, v in out.items()})


def c_reduce(c: Rat) -> Rat:
    """Drop zero parts and cancel forms that divide a part's numerator."""
    n = c.n
    current = c.parts
    while True:
        out: Dict[Dens, list] = {}
        moved = False
        for den, (re, im) in current.items():
            if re.is_zero() and im.is_zero():
                continue
            d = dict(den)
            for f in list(d):
                fp = form_poly(f, 1)
                while d.get(f):
                    qr, rr = divmod(re, fp)
                    if not rr.is_zero():
                        break
                    qi, ri = divmod(im, fp)
                    if not ri.is_zero():
                        break
                    re, im = qr, qi
                    moved = True
                    d[f] -= 1
                    if not d[f]:
                        del d[f]
            _acc(out, tuple(sorted(d.items())), re, im)
        current = {d: tuple(v) for d, v in out.items()
                   if not (v[0].is_zero() and v[1].is_zero())}
        if not moved:
            return Rat(n, current)


def c_common(c: Rat) -> Tuple[object, object, Dens]:
    """Numerator pair and denominator of ``c`` over its common denominator."""
    n = c.n
    top = c.den
    re_acc = _zero_poly(n)
    im_acc = _zero_poly(n)
    for den, (re, im) in c.parts.items():
        have = dict(den)
        mult = None
        for f, p in top:
            e = p - have.get(f, 0)
            if e:
                fp = form_poly(f, e)
                mult = fp if mult is None else mult * fp
        if mult is not None:
            re = re * mult
            im = im * mult
        re_acc = re_acc + re
        im_acc = im_acc + im
    return re_acc, im_acc, top


def c_is_zero(c: Rat) -> bool:
    """Exact test that the coefficient vanishes as a rational function."""
    r = c_reduce(c)
    if not r.parts:
        return True
    if len(r.parts) == 1:
        return False
    # forms equal up to sign would leave a spurious common factor
    r = c_resign(r, None)
    re, im, _ = c_common(r)
    return re.is_zero() and im.is_zero()


def part_order(den: Dens, re, im) -> int:
    """Conservative decay order: denominator degree minus numerator degree.

    Every action counts as large, so the true decay is never slower.
    """
    deg = max((p.total_degree() for p in (re, im) if not p.is_zero()), default=0)
    return sum(p for _, p in den) - deg


def c_truncate(c: Rat, max_order: int) -> Rat:
    """Drop parts whose decay order exceeds ``max_order``."""
    return Rat(c.n, {d: v for d, v in c.parts.items()
                     if part_order(d, *v) <= max_order})


def c_conj(c: Rat) -> Rat:
    return Rat(c.n, {d: (re, -im) for d, (re, im) in c.parts.items()})


def _dir_poly(p, mu):
    out = None
    for i, m in enumerate(mu):
        if m:
            d = p.derivative(i)
            if not d.is_zero():
                d = d * m
                out = d if out is None else out + d
    return out


def c_directional(c: Rat, mu: Tuple[int, ...]) -> Rat:
    """Directional derivative ``sum_i mu_i d/dI_i``; not reduced."""
    n = c.n
    out: Dict[Dens, list] = {}
    for den, (re, im) in c.parts.items():
        dre = _dir_poly(re, mu)
        dim = _dir_poly(im, mu)
        if dre is not None or dim is not None:
            _acc(out, den, _zero_poly(n) if dre is None else dre,
                 _zero_poly(n) if dim is None else dim)
        for j, (form, p) in enumerate(den):
            dot = sum(x * y for x, y in zip(form, mu) if y)
            if not dot:
                continue
            w = -p * dot
            nd = den[:j] + ((form, p + 1),) + den[j + 1:]
            _acc(out, nd, re * w, im * w)
    return Rat(n, {d: tuple(v) for d, v in out.items()})


# -- order-tagged parts (bracket kernel) ---------------------------------------
#
# A tagged part is ``(order, den, re, im)``.  The bracket works on lists of
# these so that pairs whose product would be truncated are never formed.


def c_tagged(c: Rat) -> list:
    return sorted(((part_order(d, re, im), d, re, im) for d, (re, im) in c.parts.items()),
                  key=lambda t: t[0])


def tagged_directional(parts: list, mu: Tuple[int, ...], limit=None) -> list:
    """Directional derivative of tagged parts; each output order is input + 1."""
    out = []
    if not parts:
        return out
    n = parts[0][2].context().nvars()
    nz = [(i, m) for i, m in enumerate(mu) if m]
    for order, den, re, im in parts:
        if limit is not None and order + 1 > limit:
            break
        acc: Dict[Dens, list] = {}
        if re.total_degree() > 0 or im.total_degree() > 0:
            dre = _dir_poly(re, mu)
            dim = _dir_poly(im, mu)
            if dre is not None or dim is not None:
                _acc(acc, den, _zero_poly(n) if dre is None else dre,
                     _zero_poly(n) if dim is None else dim)
        for j, (form, p) in enumerate(den):
            dot = 0
            for i, m in nz:
                dot += form[i] * m
            if not dot:
                continue
            w = -p * dot
            nd = den[:j] + ((form, p + 1),) + den[j + 1:]
            _acc(acc, nd, re * w, im * w)
        for d, (r, i_) in acc.items():
            out.append((order + 1, d, r, i_))
    return out


def tagged_mul_into(out: Dict[Dens, list], pa: list, pb: list, limit, rot: int) -> None:
    """``out += i^rot * (a * b)`` over pairs of tagged parts within ``limit``."""
    for oa, da, ar, ai in pa:
        if limit is not None and oa + (pb[0][0] if pb else 0) > limit:
            break
        for ob, db, br, bi in pb:
            if limit is not None and oa + ob > limit:
                break
            n = ar.context().nvars()
            re, im = _mul_pair(ar, ai, br, bi, n)
            if rot == 1:
                re, im = -im, re
            elif rot == 3:
                re, im = im, -re
            _acc(out, merge_dens(da, db), re, im)


def c_divide_form(c: Rat, form: Form, s: Gauss) -> Rat:
    """``s * c / (form . I)``; not reduced."""
    out = {}
    for den, (re, im) in c.parts.items():
        d = dict(den)
        d[form] = d.get(form, 0) + 1
        out[tuple(sorted(d.items()))] = _scale_pair(re, im, s)
    return Rat(c.n, out)


def c_depends_on_I(c: Rat) -> bool:
    for den, (re, im) in c.parts.items():
        if den or any(re.degrees()) or any(im.degrees()):
            return True
    return False


def c_sites(c: Rat) -> set:
    """0-based indices of actions appearing in a coefficient."""
    out = set()
    for den, (re, im) in c.parts.items():
        for p in (re, im):
            if not p.is_zero():
                out.update(i for i, d in enumerate(p.degrees()) if d)
        for form, _ in den:
            out.update(i for i, v in enumerate(form) if v)
    return out


def c_resign(c: Rat, pivot: int | None) -> Rat:
    """Re-canonicalize every denominator form against a new pivot."""
    out: Dict[Dens, list] = {}
    for den, (re, im) in c.parts.items():
        sign = 1
        nd: dict = {}
        for form, p in den:
            f2, s = canonical_form(form, pivot)
            if s == -1 and p % 2:
                sign = -sign
            nd[f2] = nd.get(f2, 0) + p
        if sign == -1:
            re, im = -re, -im
        _acc(out, tuple(sorted(nd.items())), re, im)
    return Rat(c.n, {d: tuple(v) for d, v in out.items()})


def c_terms(c: Rat) -> Iterator[Tuple[Key, Gauss]]:
    """Numerator monomials as ``((mono, den), (re, im))`` in sorted order."""
    for den in sorted(c.parts):
        re_p, im_p = c.parts[den]
        acc: Dict[Tuple[int, ...], list] = {}
        for mono, v in zip(re_p.monoms(), re_p.coeffs()):
            acc.setdefault(tuple(int(x) for x in mono), [ZERO, ZERO])[0] = to_mpq(v)
        for mono, v in zip(im_p.monoms(), im_p.coeffs()):
            acc.setdefault(tuple(int(x) for x in mono), [ZERO, ZERO])[1] = to_mpq(v)
        for mono in sorted(acc):
            re, im = acc[mono]
            yield (mono, den), (re, im)


def c_eval_exact(c: Rat, I: Tuple[mpq, ...]) -> Gauss:
    """Exact value of a coefficient at a rational action vector."""
    pt = [_fq(to_mpq(x)) for x in I]
    fv: Dict[Form, mpq] = {}
    re_t = ZERO
    im_t = ZERO
    for den, (re, im) in c.parts.items():
        dv = ONE
        for form, p in den:
            v = fv.get(form)
            if v is None:
                v = fv[form] = sum((x * y for x, y in zip(I, form) if y), ZERO)
            if not v:
                raise ZeroDivisionError(f"linear form {form} vanishes")
            dv *= v ** p
        if not re.is_zero():
            re_t += to_mpq(re(*pt)) / dv
        if not im.is_zero():
            im_t += to_mpq(im(*pt)) / dv
    return (re_t, im_t)


# -- public views ------------------------------------------------------------


@dataclass(frozen=True)
class LinearForm:
    """Primitive integer linear form nu . I used as a denominator factor."""

    entries: Tuple[int, ...]

    def __call__(self, I) -> float:
        return sum(v * x for v, x in zip(self.entries, I))

    def __str__(self) -> str:
        parts = []
        for i, v in enumerate(self.entries, start=1):
            if v:
                parts.append(f"{v:+d}*I{i}")
        return " ".join(parts)


@dataclass(frozen=True)
class CoeffTerm:
    constant: complex
    exact: Tuple[Fraction, Fraction]
    monomial: Tuple[int, ...]
    denominators: Tuple[Tuple[LinearForm, int], ...]


class Coefficient:
    """Read-only view on one Fourier coefficient."""

    __slots__ = ("_c",)

    def __init__(self, c: Rat):
        self._c = c

    def __len__(self) -> int:
        return len(self._c)

    @property
    def denominator(self) -> Tuple[Tuple[LinearForm, int], ...]:
        """Least common denominator of the terms."""
        return tuple((LinearForm(f), p) for f, p in self._c.den)

    def terms(self) -> list:
        out = []
        for (mono, dens), (re, im) in c_terms(self._c):
            fr = (Fraction(int(re.numerator), int(re.denominator)),
                  Fraction(int(im.numerator), int(im.denominator)))
            out.append(CoeffTerm(
                constant=complex(float(re), float(im)),
                exact=fr,
                monomial=mono,
                denominators=tuple((LinearForm(f), p) for f, p in dens),
            ))
        return out

    def __repr__(self) -> str:
        return f"Coefficient({len(self._c)} terms)"


__all__ = [
    "Coefficient", "CoeffTerm", "LinearForm", "canonical_form", "gauss",
    "to_mpq",
]
