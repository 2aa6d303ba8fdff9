"""Log-log power-law fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class ScalingFit:
    """``value ~ exp(log_prefactor) * L**exponent``."""

    exponent: float
    log_prefactor: float
    r_squared: float
    points: Tuple[Tuple[float, float], ...]

    @property
    def prefactor(self) -> float:
        return math.exp(self.log_prefactor)

    def predict(self, L: float) -> float:
        return self.prefactor * L ** self.exponent

    def as_dict(self) -> dict:
        return {"exponent": self.exponent, "log_prefactor": self.log_prefactor,
                "prefactor": self.prefactor, "r_squared": self.r_squared,
                "points": [list(p) for p in self.points]}


def fit_scaling(points: Iterable[Tuple[float, float]]) -> ScalingFit:
    """Least squares on ``(log L, log value)``.

    Raises
    ------
    ValueError
        Fewer than three points, or a non-positive ``L`` or value.
    """
    pts: List[Tuple[float, float]] = [(float(L), float(v)) for L, v in points]
    if len(pts) < 3:
        raise ValueError("a scaling fit needs at least 3 points")
    for L, v in pts:
        if not (L > 0 and math.isfinite(L)):
            raise ValueError(f"L must be positive and finite, got {L}")
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"values must be positive and finite, got {v} at L = {L}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise ValueError("L values must not all coincide")
    res = stats.linregress(x, y)
    r2 = float(res.rvalue ** 2) if np.ptp(y) > 0 else 1.0
    return ScalingFit(float(res.slope), float(res.intercept),
                      min(1.0, max(0.0, r2)), tuple(pts))


__all__ = ["ScalingFit", "fit_scaling"]
