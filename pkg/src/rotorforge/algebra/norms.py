"""Sup-norm estimates on complex polydisc-times-strip domains."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .evaluate import CompiledFunction
from .fourier import FourierFunction


@dataclass(frozen=True)
class DomainSpec:
    """Domain ``|I_i - L delta_ik| < r L``, ``|Im phi_i| < sigma``."""

    L: float
    r: float
    sigma: float

    def __post_init__(self):
        if self.L <= 0 or self.r <= 0 or self.sigma <= 0:
            raise ValueError("L, r and sigma must be positive")
        if self.sigma > 1:
            raise ValueError("sigma must not exceed 1")


def default_domain(L: float, n: int, max_mode: int, sigma: float = 0.5) -> DomainSpec:
    """Domain used for order-of-magnitude fits: r = 1/(4 n maxmode)."""
    return DomainSpec(L=L, r=1.0 / (4 * n * max(1, max_mode)), sigma=sigma)


def radius_limit(f: FourierFunction) -> float:
    """Largest r for which every denominator stays above L/2 on the domain."""
    biggest = f.max_mode()
    for form in f.forms():
        biggest = max(biggest, max(abs(v) for v in form))
    if biggest == 0:
        return np.inf
    return 1.0 / (2 * f.n * biggest)


def sample_points(n: int, k: int, dom: DomainSpec, budget: int, seed: int = 20240917):
    """Deterministic low-discrepancy points on the distinguished boundary.

    By the maximum principle the sup of an analytic function on the
    polydisc-times-strip is approached where ``|I_i - L delta_ik| = rL`` and
    ``|Im phi_i| = sigma``; the samples live there.  Prefixes of the
    sequence are reused for smaller budgets, so estimates are monotone.
    """
    sampler = qmc.Halton(d=3 * n, scramble=True, seed=seed)
    u = sampler.random(budget)
    center = np.zeros(n)
    center[k - 1] = dom.L
    I = center[None, :] + dom.r * dom.L * np.exp(2j * np.pi * u[:, :n])
    sign = np.where(u[:, 2 * n:] < 0.5, -1.0, 1.0)
    phi = 2 * np.pi * u[:, n:2 * n] + 1j * dom.sigma * sign
    # the real-axis centre is always included
    I[0] = center
    phi[0] = 0.0
    return I, phi


def sup_norm_estimate(f: FourierFunction, dom: DomainSpec, budget: int = 4096,
                      k: Optional[int] = None, seed: int = 20240917,
                      check_radius: bool = True) -> float:
    """Lower estimate of ``sup |f|`` over the complex domain."""
    if k is None:
        k = f.k if f.k is not None else f.n
    if check_radius and dom.r >= radius_limit(f):
        raise ValueError(
            f"r = {dom.r} violates r < 1/(2 n |N|) = {radius_limit(f)}")
    if f.is_syntactically_zero():
        return 0.0
    I, phi = sample_points(f.n, k, dom, budget, seed)
    vals = np.abs(CompiledFunction(f)(I, phi))
    return float(np.max(vals))


__all__ = ["DomainSpec", "default_domain", "radius_limit", "sample_points",
           "sup_norm_estimate"]
