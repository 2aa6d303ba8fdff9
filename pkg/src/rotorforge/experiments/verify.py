"""Exact identity checks: the normal form of a chain and the bracket algebra."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..algebra import (add, apply_Q, compile_function, conjugate, dumps, evaluate_mp,
                       is_zero, loads, mul, poisson_bracket, scale, sub)
from ..chain import ChainSpec
from ..normal_form import build_normal_form, check_identities
from .bounds import random_function
from .report import Report, Table


def _fixture(seed: int):
    """Three functions with rational-form denominators and a shared ``(n, k)``."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    k = int(rng.integers(1, n + 1))
    f = apply_Q(random_function(rng, n, k, max_mode=2, max_terms=2).function(), k)
    g = random_function(rng, n, k, max_mode=2, max_terms=2).function()
    h = random_function(rng, n, k, max_mode=2, max_terms=2, linear=False).function()
    return n, k, f, g, h, rng


def algebra_properties(seeds: Sequence[int] = range(8), tol: float = 1e-12) -> Report:
    """Jacobi, Leibniz, antisymmetry, reality, evaluation and serialization.

    The first four are decided exactly; evaluation compares double-precision
    evaluation against 50-digit evaluation to ``tol`` relative.
    """
    rep = Report("algebra_properties", params={"seeds": list(seeds), "tol": tol})
    rows = []
    for seed in seeds:
        n, k, f, g, h, rng = _fixture(seed)
        anti = is_zero(add(poisson_bracket(f, g), poisson_bracket(g, f)))
        jac = is_zero(add(add(poisson_bracket(f, poisson_bracket(g, h)),
                              poisson_bracket(g, poisson_bracket(h, f))),
                          poisson_bracket(h, poisson_bracket(f, g))))
        leib = is_zero(sub(poisson_bracket(f, mul(g, h)),
                           add(mul(poisson_bracket(f, g), h), mul(g, poisson_bracket(f, h)))))
        fr, gr = add(f, conjugate(f)), add(g, conjugate(g))
        real = poisson_bracket(fr, gr).check_real() and fr.check_real()
        back = loads(dumps(f))
        ser = back == f and is_zero(sub(back, f))
        I = rng.uniform(-1, 1, n)
        I[k - 1] += 50.0
        phi = rng.uniform(0, 2 * np.pi, n)
        fg = poisson_bracket(f, g)
        num = complex(compile_function(fg)(I, phi))
        ref = complex(evaluate_mp(fg, I, phi, 50))
        err = abs(num - ref) / max(1.0, abs(ref))
        rows.append([seed, n, k, int(anti), int(jac), int(leib), int(real), int(ser), err])
        rep.check(f"antisymmetry seed {seed}", anti)
        rep.check(f"Jacobi seed {seed}", jac)
        rep.check(f"Leibniz seed {seed}", leib)
        rep.check(f"reality seed {seed}", real)
        rep.check(f"serialization round trip seed {seed}", ser)
        rep.check(f"evaluation consistency seed {seed}", err <= tol, err, f"<= {tol}")
    rep.tables["algebra"] = Table(["seed", "n", "k", "antisymmetry", "jacobi", "leibniz",
                                   "reality", "serialization", "eval_error"], rows)
    return rep


def verify_chain(chain: ChainSpec, seeds: Sequence[int] = range(8)) -> Report:
    """Normal-form identities of ``chain`` plus :func:`algebra_properties`."""
    nf = build_normal_form(chain)
    ids = check_identities(nf)
    rep = Report("verify", params={"n": chain.n, "k": chain.k,
                                   "potentials": [U.spec for U in chain.potentials]})
    rows = []
    for name, flags in ids.items():
        for j, ok in enumerate(flags):
            rows.append([name, j, int(bool(ok))])
            rep.check(f"{name} j={j}", bool(ok))
    rep.tables["identities"] = Table(["identity", "j", "holds"], rows)
    alg = algebra_properties(seeds)
    rep.checks.extend(alg.checks)
    rep.tables.update(alg.tables)
    return rep


__all__ = ["algebra_properties", "verify_chain"]
