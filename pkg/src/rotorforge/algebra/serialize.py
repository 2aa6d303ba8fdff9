"""Line-oriented text format for Fourier functions.

::

    # fourier n=2 real=1 k=2
    mu=(-1,1) ; 0/2 + -1/2 i * I^(0,0) / prod[(-1,1)(1)]

One mode per line; terms are separated by `` ; ``.  Each term is written
over a common denominator for its real and imaginary parts.
"""

from __future__ import annotations

import re
from math import lcm

from gmpy2 import mpq

from .coefficient import c_from_terms, c_terms
from .fourier import FourierFunction

_HEADER = re.compile(r"^# fourier n=(\d+) real=([01]) k=(\w+)$")
_TERM = re.compile(
    r"^(-?\d+)/(\d+) \+ (-?\d+)/(\d+) i \* I\^\(([-\d,]*)\) / prod\[(.*)\]$")
_DEN = re.compile(r"\(([-\d,]+)\)\((\d+)\)")


def _tuple(s: str) -> tuple:
    return tuple(int(v) for v in s.split(",")) if s else ()


def _fmt(t) -> str:
    return "(" + ",".join(str(v) for v in t) + ")"


def dumps(f: FourierFunction) -> str:
    lines = [f"# fourier n={f.n} real={int(f.real)} k={f.k}"]
    for mu, c in sorted(f._modes.items()):
        parts = ["mu=" + _fmt(mu)]
        for (mono, dens), (re_, im_) in c_terms(c):
            d = lcm(int(re_.denominator), int(im_.denominator))
            a = int(re_ * d)
            b = int(im_ * d)
            den = "".join(_fmt(form) + f"({p})" for form, p in dens)
            parts.append(f"{a}/{d} + {b}/{d} i * I^{_fmt(mono)} / prod[{den}]")
        lines.append(" ; ".join(parts))
    return "\n".join(lines) + "\n"


def loads(text: str) -> FourierFunction:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty input")
    m = _HEADER.match(lines[0])
    if not m:
        raise ValueError(f"bad header: {lines[0]!r}")
    n = int(m.group(1))
    real = m.group(2) == "1"
    k = None if m.group(3) == "None" else int(m.group(3))
    modes = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(" ; ")
        if not parts[0].startswith("mu="):
            raise ValueError(f"line {lineno}: expected mu=(...)")
        mu = _tuple(parts[0][4:-1])
        if len(mu) != n:
            raise ValueError(f"line {lineno}: mode length {len(mu)} != {n}")
        terms = []
        for part in parts[1:]:
            t = _TERM.match(part)
            if not t:
                raise ValueError(f"line {lineno}: malformed term {part!r}")
            a, d1, b, d2 = (int(t.group(i)) for i in range(1, 5))
            mono = _tuple(t.group(5))
            dens = tuple((_tuple(x), int(p)) for x, p in _DEN.findall(t.group(6)))
            terms.append(((mono, dens), (mpq(a, d1), mpq(b, d2))))
        coef = c_from_terms(n, terms)
        if not coef.is_zero():
            modes[mu] = coef
    return FourierFunction(n, modes, real=real, k=k)


__all__ = ["dumps", "loads"]
