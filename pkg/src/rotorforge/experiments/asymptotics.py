"""Plateau oscillations of the slow sites against the leading-order ladder.

For cosine bonds the forced response of the sites left of the fast one is, to
leading order in ``1/L`` and with ``theta = phi_k - phi_{k-1}``,

    I_{k-j}   ~ (-1)^j cos(theta) / L^(2j-1)
    phi_{k-j} ~ (-1)^j sin(theta) / L^(2j)

so consecutive sites alternate in sign.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional

import numpy as np

from ..integrator import integrate
from .report import Report, Table
from .runs import ExperimentConfig, initial_state
from .scaling import is_cosine


def fit_harmonic(theta: np.ndarray, t: np.ndarray, y: np.ndarray):
    """Least squares ``y ~ A cos(theta) + B sin(theta) + C + D t``; returns ``(A, B)``."""
    X = np.stack([np.cos(theta), np.sin(theta), np.ones_like(t), t - t[0]], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(coef[0]), float(coef[1])


def _phase_error(A: float, B: float, want_A: float, want_B: float) -> float:
    d = math.atan2(B, A) - math.atan2(want_B, want_A)
    return abs(math.atan2(math.sin(d), math.cos(d)))


def asymptotic_comparison(cfg: ExperimentConfig, L: Optional[float] = None,
                          burn_in: float = 30.0, periods: int = 4,
                          amplitude_tol: Optional[Dict[int, float]] = None,
                          phase_tol: float = 0.1) -> Report:
    """Fit amplitude and phase of every slow site over a few fast periods.

    ``L`` defaults to the largest value of ``cfg.L_list``.  Tolerances on the
    relative amplitude error are 10% for ``j = 1`` and 25% beyond unless
    given; the phase of ``I_{k-1}`` and ``phi_{k-1}`` is checked to
    ``phase_tol`` and the sign of the ``I`` ladder must alternate.

    Raises
    ------
    ValueError
        A bond potential is not ``-cos``.
    """
    chain = cfg.chain
    if not all(is_cosine(U) for U in chain.potentials):
        raise ValueError("the asymptotic ladder is derived for U = -cos only")
    k = chain.k
    if k < 2:
        raise ValueError("needs at least one site left of the fast one")
    L = float(cfg.L_list[-1] if L is None else L)
    tol = {1: 0.10}
    tol.update(amplitude_tol or {})
    pre = integrate(chain, initial_state(cfg, L), cfg.integrator(burn_in, sample_stride=0),
                    L=L)
    tr = integrate(chain, pre.final,
                   cfg.integrator(periods * 2 * math.pi / L, sample_stride=1), L=L)
    theta = tr.phi[:, k - 1] - tr.phi[:, k - 2]
    t = tr.times
    rep = Report("asymptotics", params={"n": chain.n, "k": k, "L": L, "burn_in": burn_in,
                                        "periods": periods})
    rows: List[list] = []
    signs = []
    for j in range(1, k):
        site = k - j
        sgn = (-1) ** j
        for var, p, y in (("I", 2 * j - 1, tr.I[:, site - 1]), ("phi", 2 * j, tr.phi[:, site - 1])):
            A, B = fit_harmonic(theta, t, y)
            want_A, want_B = (sgn / L ** p, 0.0) if var == "I" else (0.0, sgn / L ** p)
            amp = math.hypot(A, B) * L ** p
            ph = _phase_error(A, B, want_A, want_B)
            rows.append([f"{var}{site}", j, A, B, want_A, want_B, amp, ph])
            jt = tol.get(j, 0.25)
            if var == "I":
                signs.append(math.copysign(1.0, A))
                rep.check(f"amplitude I{site} vs 1/L^{p}", abs(amp - 1) <= jt, amp, f"1 +- {jt}")
            elif j == 1:
                rep.check(f"amplitude phi{site} vs 1/L^{p}", abs(amp - 1) <= jt, amp,
                          f"1 +- {jt}")
            if j == 1:
                rep.check(f"phase {var}{site}", ph <= phase_tol, ph, f"<= {phase_tol}")
    rep.tables["ladder"] = Table(["variable", "j", "cos_coef", "sin_coef", "expected_cos",
                                  "expected_sin", "relative_amplitude", "phase_error"], rows)
    if len(signs) > 1:
        alt = all(a * b < 0 for a, b in zip(signs, signs[1:]))
        rep.check("sign alternation", alt and signs[0] < 0, signs)
    return rep


__all__ = ["asymptotic_comparison", "fit_harmonic"]
