"""Exact identity testing for Fourier functions.

A coefficient is tested in three stages: cancellation of denominator forms
part by part, exact evaluation at seeded rational points (any nonzero value
proves non-vanishing), and finally expansion over the common denominator.
"""

from __future__ import annotations

import random

from gmpy2 import mpq

from .coefficient import Coef, c_eval_exact, c_is_zero, c_reduce
from .fourier import FourierFunction


def _random_point(n: int, rng: random.Random):
    return tuple(mpq(rng.randint(-997, 997), rng.randint(1, 89)) for _ in range(n))


def probably_nonzero(c: Coef, n: int, seed: int = 0, points: int = 3) -> bool:
    """True if exact evaluation finds a nonzero value at a seeded point."""
    rng = random.Random(seed)
    done = 0
    tries = 0
    while done < points and tries < 50:
        tries += 1
        pt = _random_point(n, rng)
        try:
            re, im = c_eval_exact(c, pt)
        except ZeroDivisionError:
            continue
        done += 1
        if re or im:
            return True
    return False


def coefficient_is_zero(c: Coef, seed: int = 0) -> bool:
    c = c_reduce(c)
    if c.is_zero():
        return True
    if probably_nonzero(c, c.n, seed):
        return False
    return c_is_zero(c)


def is_zero(f: FourierFunction, seed: int = 0) -> bool:
    """Exact test that ``f`` vanishes identically."""
    return all(coefficient_is_zero(c, seed) for c in f._modes.values())


def simplify(f: FourierFunction) -> FourierFunction:
    """Equal function with every coefficient in reduced form."""
    modes = {}
    for mu, c in f._modes.items():
        r = c_reduce(c)
        if not r.is_zero():
            modes[mu] = r
    return FourierFunction(f.n, modes, real=f.real, k=f.k)


__all__ = ["is_zero", "simplify", "coefficient_is_zero", "probably_nonzero"]
