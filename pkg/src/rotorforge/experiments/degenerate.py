"""Plateau anomaly of a chain whose first bond potential is degenerate.

When ``U_1'`` and ``U_1''`` vanish together the slow end of the chain no longer
follows the ``L^(1 - 2|k - i|)`` ladder.  For ``n = k = 3`` with a quartic
minimum on the first bond the plateau obeys

* ``|I_2| / |I_3| ~ L^-2`` and ``|I_1| / |I_2| ~ L^-6``,
* ``max |I_1| ~ 1 / (3 L^7)``,
* ``gamma <I_1^2> ~ L^-14``.
"""

from __future__ import annotations

from typing import List, Optional

from ..chain import AssumptionViolation, check_nondegenerate
from .fitting import fit_scaling
from .report import Report, Table
from .runs import ExperimentConfig, PlateauRun, plateau_sweep

RATIO_EXPONENTS = {"I2/I3": -2.0, "I1/I2": -6.0}
RATE_EXPONENT = -14.0


def i1_amplitude(L: float) -> float:
    """``1 / (3 L^7)``: the maximum ``2/3`` of ``c - c^3/3`` on ``[-1, 1]`` over ``2 L^7``."""
    return 1.0 / (3.0 * L ** 7)


def _require_degenerate_chain(cfg: ExperimentConfig) -> None:
    chain = cfg.chain
    if (chain.n, chain.k) != (3, 3):
        raise ValueError("the degenerate experiment needs n = k = 3")
    rep1 = check_nondegenerate(chain.potentials[0])
    if rep1:
        raise ValueError(f"U_1 = {chain.potentials[0].spec!r} is nondegenerate; the "
                         "experiment needs U_1' and U_1'' to vanish together")
    if not chain.degenerate_allowed:
        raise AssumptionViolation("U_1 is degenerate and degenerate_allowed is not set")
    if not check_nondegenerate(chain.potentials[1]):
        raise ValueError("U_2 must be nondegenerate")


def degenerate_experiment(cfg: ExperimentConfig, runs: Optional[List[PlateauRun]] = None,
                          ratio_tol: float = 0.3, amplitude_tol: float = 0.3,
                          rate_tol: float = 1.0) -> Report:
    """Ratio, amplitude and dissipation-rate laws for the degenerate chain.

    ``I_3`` enters the ratio through its absolute plateau size ``|<I_3>|``
    plus its oscillation, which is ``~ L``.  The ``I_1`` plateau is preceded
    by a slowly damped soft-mode oscillation, so ``cfg.max_time`` usually has
    to be several times ``10^5``; ``"auto"`` transient resolves to the
    adiabatic ramp.
    """
    _require_degenerate_chain(cfg)
    cfg.require_fit()
    chain = cfg.chain
    cfg = cfg.resolved("ramp")
    runs = runs if runs is not None else plateau_sweep(cfg)
    rep = Report("degenerate", params={"n": chain.n, "k": chain.k, "gamma": chain.gamma,
                                       "L_list": list(cfg.L_list),
                                       "transient": cfg.transient,
                                       "max_time": cfg.max_time})
    rows = []
    for r in runs:
        rep.check(f"plateau reached at L={r.L:g}", r.plateau, r.elapsed)
        i1, i2, i3 = float(r.levels[0]), float(r.levels[1]), r.abs_level_k
        want = i1_amplitude(r.L)
        rows.append([r.L, i1, i2, i3, i2 / i3, i1 / i2, want, i1 / want, r.rate, r.elapsed])
        rep.check(f"I1 amplitude vs 1/(3L^7) at L={r.L:g}",
                  abs(i1 / want - 1) <= amplitude_tol, i1 / want, f"1 +- {amplitude_tol}")
    rep.tables["degenerate"] = Table(
        ["L", "level1", "level2", "abs_level3", "ratio23", "ratio12", "i1_expected",
         "i1_ratio", "rate", "elapsed"], rows)
    fits = {
        "I2/I3": fit_scaling([(r.L, float(r.levels[1]) / r.abs_level_k) for r in runs]),
        "I1/I2": fit_scaling([(r.L, float(r.levels[0] / r.levels[1])) for r in runs]),
        "rate": fit_scaling([(r.L, r.rate) for r in runs]),
    }
    for name, want in RATIO_EXPONENTS.items():
        e = fits[name].exponent
        rep.check(f"exponent {name}", abs(e - want) <= ratio_tol, e, f"{want} +- {ratio_tol}")
    e = fits["rate"].exponent
    rep.check("rate exponent", abs(e - RATE_EXPONENT) <= rate_tol, e,
              f"{RATE_EXPONENT} +- {rate_tol}")
    rep.results.update({"fits": {k: f.as_dict() for k, f in fits.items()},
                        "runs": [r.as_dict() for r in runs]})
    return rep


__all__ = ["degenerate_experiment", "i1_amplitude", "RATIO_EXPONENTS", "RATE_EXPONENT"]
