"""Plateau amplitude scaling, left/right symmetry and the dissipation-rate law."""

from __future__ import annotations

from typing import List, Optional, Sequence

from ..chain import PRESETS, ChainSpec, Potential
from .fitting import fit_scaling
from .report import Report, Table
from .runs import ExperimentConfig, PlateauRun, plateau_sweep

R2_MIN = 0.95


def is_cosine(U: Potential) -> bool:
    """``U(psi) = -cos(psi)``, the reference potential with unit prefactors."""
    ref = Potential.from_modes(PRESETS["cosine"])
    return U.modes == ref.modes


def expected_amplitude_exponent(k: int, i: int) -> int:
    """``1 - 2|k - i|`` for the plateau level of ``I_i``."""
    return 1 - 2 * abs(k - i)


def _levels_table(chain: ChainSpec, runs: Sequence[PlateauRun]) -> Table:
    n = chain.n
    header = (["L"] + [f"level{i}" for i in range(1, n + 1)]
              + ["abs_level_k", "mean_k", "rate", "elapsed", "plateau"])
    rows = []
    for r in runs:
        rows.append([r.L, *map(float, r.levels), r.abs_level_k, r.mean_k, r.rate,
                     r.elapsed, int(r.plateau)])
    return Table(header, rows)


def scaling_experiment(cfg: ExperimentConfig, runs: Optional[List[PlateauRun]] = None,
                       exponent_tol: float = 0.2, prefactor_tol: float = 0.15,
                       symmetry_tol: float = 0.25) -> Report:
    """Fit plateau levels against ``L`` for every site.

    Checks each exponent against ``1 - 2|k - i|``, every fit's ``r^2``, the
    unit prefactors of cosine chains at the largest ``L`` and, for ``k < n``,
    the agreement of levels at equal distance from the fast site.
    """
    chain = cfg.chain
    cfg.require_fit()
    cfg = cfg.resolved("cold")
    runs = runs if runs is not None else plateau_sweep(cfg)
    n, k = chain.n, chain.k
    rep = Report("scaling", params={"n": n, "k": k, "gamma": chain.gamma,
                                    "L_list": list(cfg.L_list), "transient": cfg.transient})
    rep.tables["levels"] = _levels_table(chain, runs)
    for r in runs:
        rep.check(f"plateau reached at L={r.L:g}", r.plateau, r.elapsed)
    fits = {}
    for i in range(1, n + 1):
        fit = fit_scaling([(r.L, float(r.levels[i - 1])) for r in runs])
        fits[i] = fit
        if i == k:
            continue
        want = expected_amplitude_exponent(k, i)
        rep.check(f"exponent I{i}", abs(fit.exponent - want) <= exponent_tol,
                  fit.exponent, f"{want} +- {exponent_tol}")
        rep.check(f"r2 I{i}", fit.r_squared >= R2_MIN, fit.r_squared, f">= {R2_MIN}")
    rep.results["fits"] = {str(i): f.as_dict() for i, f in fits.items()}
    rep.results["runs"] = [r.as_dict() for r in runs]
    cosine = all(is_cosine(U) for U in chain.potentials)
    if cosine:
        last = runs[-1]
        pref = {}
        for i in range(1, n + 1):
            if i == k:
                continue
            p = float(last.levels[i - 1]) * last.L ** (-expected_amplitude_exponent(k, i))
            pref[str(i)] = p
            rep.check(f"prefactor I{i} at L={last.L:g}", abs(p - 1) <= prefactor_tol, p,
                      f"1 +- {prefactor_tol}")
        rep.results["prefactors"] = pref
    _symmetry_checks(rep, chain, runs, symmetry_tol)
    return rep


def _symmetry_checks(rep: Report, chain: ChainSpec, runs: Sequence[PlateauRun],
                     tol: float) -> None:
    n, k = chain.n, chain.k
    sym = {}
    for d in range(1, n):
        left, right = k - d, k + d
        if left < 1 or right > n:
            continue
        for r in runs:
            a, b = float(r.levels[left - 1]), float(r.levels[right - 1])
            dev = abs(a - b) / max(a, b)
            sym[f"{d}@{r.L:g}"] = dev
            rep.check(f"symmetry |i-k|={d} at L={r.L:g}", dev <= tol, dev, f"<= {tol}")
    if sym:
        rep.results["symmetry"] = sym


def symmetry_experiment(cfg: ExperimentConfig, runs: Optional[List[PlateauRun]] = None,
                        tol: float = 0.25) -> Report:
    """Plateau levels at equal distance left and right of the fast site.

    Sites right of ``k`` carry no damping, so free oscillations excited by the
    start state decay very slowly; by default the run starts from a state
    prepared by adiabatic switching.
    """
    chain = cfg.chain
    if chain.k >= chain.n:
        raise ValueError("the symmetry experiment needs k < n")
    cfg = cfg.resolved("ramp")
    runs = runs if runs is not None else plateau_sweep(cfg)
    rep = Report("symmetry", params={"n": chain.n, "k": chain.k, "gamma": chain.gamma,
                                     "L_list": list(cfg.L_list),
                                     "transient": cfg.transient})
    rep.tables["levels"] = _levels_table(chain, runs)
    for r in runs:
        rep.check(f"plateau reached at L={r.L:g}", r.plateau, r.elapsed)
    _symmetry_checks(rep, chain, runs, tol)
    rep.results["runs"] = [r.as_dict() for r in runs]
    return rep


def dissipation_experiment(cfg: ExperimentConfig, runs: Optional[List[PlateauRun]] = None,
                           exponent_tol: float = 0.2) -> Report:
    """Plateau dissipation rate ``gamma <I_1^2>`` against ``L``.

    The fitted exponent is compared with ``6 - 4k``.  Two consistency checks
    accompany it: the rate agrees with ``gamma A_1^2 / 2`` for the site-1
    amplitude ``A_1`` within a factor 2, and the rate exponent is twice the
    amplitude exponent within 0.4.
    """
    chain = cfg.chain
    cfg.require_fit()
    if chain.gamma <= 0:
        raise ValueError("the dissipation experiment needs gamma > 0")
    cfg = cfg.resolved("cold")
    runs = runs if runs is not None else plateau_sweep(cfg)
    k = chain.k
    rep = Report("dissipation", params={"n": chain.n, "k": k, "gamma": chain.gamma,
                                        "L_list": list(cfg.L_list),
                                        "transient": cfg.transient})
    for r in runs:
        rep.check(f"plateau reached at L={r.L:g}", r.plateau, r.elapsed)
    fit = fit_scaling([(r.L, r.rate) for r in runs])
    want = 6 - 4 * k
    rep.check("rate exponent", abs(fit.exponent - want) <= exponent_tol, fit.exponent,
              f"{want} +- {exponent_tol}")
    rep.check("rate r2", fit.r_squared >= R2_MIN, fit.r_squared, f">= {R2_MIN}")
    amp = fit_scaling([(r.L, float(r.levels[0])) for r in runs])
    rep.check("rate exponent vs 2 x amplitude exponent",
              abs(fit.exponent - 2 * amp.exponent) <= 0.4,
              fit.exponent - 2 * amp.exponent, "0 +- 0.4")
    rows = []
    for r in runs:
        sinus = chain.gamma * float(r.levels[0]) ** 2 / 2
        ratio = r.rate / sinus if sinus > 0 else float("inf")
        rows.append([r.L, r.rate, sinus, ratio, r.elapsed])
        rep.check(f"rate vs gamma A1^2/2 at L={r.L:g}", 0.5 <= ratio <= 2.0, ratio,
                  "[0.5, 2]")
    rep.tables["rates"] = Table(["L", "rate", "gamma_A1sq_half", "ratio", "elapsed"], rows)
    rep.results.update({"fit": fit.as_dict(), "amplitude_fit": amp.as_dict(),
                        "expected_exponent": want,
                        "runs": [r.as_dict() for r in runs]})
    return rep


__all__ = ["scaling_experiment", "dissipation_experiment", "symmetry_experiment", "is_cosine",
           "expected_amplitude_exponent"]
