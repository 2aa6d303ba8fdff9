"""Experiment configuration, start states and runs to the quasi-stationary plateau."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..chain import ChainSpec, State
from ..integrator import (IntegratorConfig, WindowStats, integrate,
                          prepare_quasi_stationary)
from .windows import PlateauNotFound, detect_quasi_stationary, series_from_stats

TRANSIENT_POLICIES = ("auto", "cold", "ramp")


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by the experiments.

    Parameters
    ----------
    chain : ChainSpec
    L_list : sequence of float
        Strictly increasing fast-rotor actions.
    rho : float
        Radius of the random start ball around ``L e_k``; ``0`` selects the
        deterministic start ``I = L e_k``, ``phi = 0``.
    alpha : float
        Horizon coefficient for ``T = alpha L^(2k-3)`` where a horizon is used.
    transient : {"auto", "cold", "ramp"}
        ``"ramp"`` starts from a state prepared by adiabatic switching of the
        bonds at the fast site (see :func:`prepare_quasi_stationary`).
        ``"auto"`` lets each experiment pick; most use ``"cold"``.
    ramp_time : float
    seeds : tuple of int
    scheme, steps_per_fast_period
        Integrator settings.
    min_windows : int
        Windows in the first integration chunk; runs double until the plateau
        is confirmed.
    max_time : float
        Hard cap on the integration time of one run.
    plateau_tol : float
        Relative agreement required between the last two quarters of a run.
    jobs : int
        Worker processes for sweeps over ``L``.
    L_min : float
        Smallest admissible ``L``.
    """

    chain: ChainSpec
    L_list: Tuple[float, ...] = (10.0, 20.0, 40.0, 80.0)
    rho: float = 0.0
    alpha: float = 1.0
    transient: str = "auto"
    ramp_time: float = 200.0
    seeds: Tuple[int, ...] = (0,)
    scheme: str = "yoshida4"
    steps_per_fast_period: int = 64
    min_windows: int = 8000
    max_time: float = 2.0e5
    plateau_tol: float = 0.05
    jobs: int = 1
    L_min: float = 2.0

    def __post_init__(self):
        Ls = tuple(float(L) for L in self.L_list)
        object.__setattr__(self, "L_list", Ls)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not Ls:
            raise ValueError("L_list must not be empty")
        if any(b <= a for a, b in zip(Ls, Ls[1:])):
            raise ValueError("L_list must be strictly increasing")
        if Ls[0] < self.L_min:
            raise ValueError(f"L = {Ls[0]} is below L_min = {self.L_min}")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if self.transient not in TRANSIENT_POLICIES:
            raise ValueError(f"transient must be one of {TRANSIENT_POLICIES}")
        if self.min_windows < 200:
            raise ValueError("min_windows must be at least 200")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        IntegratorConfig(self.scheme, self.steps_per_fast_period, 0.0)

    def require_fit(self) -> None:
        if len(self.L_list) < 3:
            raise ValueError("a scaling fit needs at least 3 values in L_list")

    def integrator(self, t_final: float, **kw) -> IntegratorConfig:
        return IntegratorConfig(self.scheme, self.steps_per_fast_period, t_final, **kw)

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def resolved(self, default: str) -> "ExperimentConfig":
        """Copy with ``"auto"`` replaced by ``default``."""
        if self.transient == "auto":
            return replace(self, transient=default)
        return self


def cold_start(chain: ChainSpec, L: float) -> State:
    """``I = L e_k`` and all angles zero."""
    I = np.zeros(chain.n)
    I[chain.k - 1] = L
    return State(I, np.zeros(chain.n))


def ball_start(chain: ChainSpec, L: float, rho: float, seed: int) -> State:
    """Uniform actions in ``|I_i - L delta_ik| <= rho`` and uniform angles."""
    rng = np.random.default_rng(seed)
    I = rng.uniform(-rho, rho, chain.n)
    I[chain.k - 1] += L
    phi = rng.uniform(0.0, 2 * math.pi, chain.n)
    return State(I, phi)


def initial_state(cfg: ExperimentConfig, L: float, seed: Optional[int] = None) -> State:
    seed = cfg.seeds[0] if seed is None else seed
    if cfg.transient == "ramp" and cfg.rho == 0:
        return prepare_quasi_stationary(cfg.chain, L, cfg.ramp_time,
                                        cfg.integrator(cfg.ramp_time))
    if cfg.rho > 0:
        return ball_start(cfg.chain, L, cfg.rho, seed)
    return cold_start(cfg.chain, L)


@dataclass
class PlateauRun:
    """A run continued until its windowed statistics stop drifting."""

    L: float
    windows: WindowStats
    plateau: bool
    elapsed: float
    measure_from: int
    levels: np.ndarray
    abs_level_k: float
    mean_k: float
    rate: float
    mean_sq: np.ndarray
    onset: Dict[int, Optional[float]]
    final: State
    H0: float

    @property
    def window_length(self) -> float:
        return self.windows.window_length

    def as_dict(self) -> dict:
        return {"L": self.L, "plateau": self.plateau, "elapsed": self.elapsed,
                "windows": self.windows.n_windows, "measure_from": self.measure_from,
                "levels": self.levels.tolist(), "abs_level_k": self.abs_level_k,
                "mean_k": self.mean_k, "rate": self.rate,
                "mean_sq": self.mean_sq.tolist(),
                "onset": {str(k): v for k, v in self.onset.items()}}


def _quarter_medians(stats: WindowStats, k: int):
    nw = stats.n_windows
    q = nw // 4
    a = slice(nw - 2 * q, nw - q)
    b = slice(nw - q, nw)
    ma = np.median(stats.maxima[a], axis=0)
    mb = np.median(stats.maxima[b], axis=0)
    ra = float(np.mean(stats.dissipated[a]))
    rb = float(np.mean(stats.dissipated[b]))
    return ma, mb, ra, rb


def plateau_confirmed(stats: WindowStats, k: int, tol: float, gamma: float) -> bool:
    """The last two quarters agree in every site's median level and in the rate."""
    if stats.n_windows < 200:
        return False
    ma, mb, ra, rb = _quarter_medians(stats, k)
    scale = np.maximum(np.abs(ma), np.abs(mb))
    ok = bool(np.all((scale == 0) | (np.abs(ma - mb) <= tol * scale)))
    if gamma > 0:
        s = max(abs(ra), abs(rb))
        ok = ok and (s == 0 or abs(ra - rb) <= 2 * tol * s)
    return ok


def run_plateau(cfg: ExperimentConfig, L: float, state0: Optional[State] = None,
                chain: Optional[ChainSpec] = None) -> PlateauRun:
    """Integrate in doubling chunks until the plateau is confirmed or ``max_time``.

    The statistics are taken over the last half of the run: median window
    maxima per site, the dissipation rate ``gamma <I_1^2>`` from the ledger
    and the window mean of ``I_k``.
    """
    chain = chain or cfg.chain
    state = state0 if state0 is not None else initial_state(cfg, L)
    h = 2 * math.pi / (cfg.steps_per_fast_period * max(abs(L), 1.0))
    wlen = cfg.steps_per_fast_period * h
    stats: Optional[WindowStats] = None
    t = 0.0
    target = cfg.min_windows
    H0 = None
    plateau = False
    while True:
        have = 0 if stats is None else stats.n_windows
        chunk = target - have
        max_chunk = int((cfg.max_time - t) / wlen)
        chunk = min(chunk, max_chunk)
        if chunk <= 0:
            break
        tr = integrate(chain, state, cfg.integrator(chunk * wlen, sample_stride=0,
                                                    window_stats=True), L=L, t0=t)
        if H0 is None:
            H0 = tr.H0
        stats = tr.windows if stats is None else stats.extend(tr.windows)
        state = tr.final
        t += chunk * wlen
        if plateau_confirmed(stats, chain.k, cfg.plateau_tol, chain.gamma):
            plateau = True
            break
        target = 2 * stats.n_windows
    if stats is None:
        raise ValueError("max_time is too small for a single window")
    nw = stats.n_windows
    start = nw // 2
    blk = slice(start, nw)
    levels = np.median(stats.maxima[blk], axis=0)
    absk = float(np.median(np.abs(stats.mean_k[blk]) + stats.maxima[blk, chain.k - 1]))
    rate = float(np.sum(stats.dissipated[blk]) / ((nw - start) * wlen))
    onset: Dict[int, Optional[float]] = {}
    for site in range(1, chain.n + 1):
        try:
            onset[site] = detect_quasi_stationary(series_from_stats(stats, site))[0]
        except (PlateauNotFound, ValueError):
            onset[site] = None
    return PlateauRun(L=float(L), windows=stats, plateau=plateau, elapsed=t,
                      measure_from=start, levels=levels, abs_level_k=absk,
                      mean_k=float(np.mean(stats.mean_k[blk])), rate=rate,
                      mean_sq=np.mean(stats.mean_sq[blk], axis=0), onset=onset,
                      final=state, H0=float(H0))


def sweep(fn: Callable, items: Sequence, jobs: int = 1) -> List:
    """Map ``fn`` over ``items`` in order, optionally in worker processes."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


class _PlateauTask:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg

    def __call__(self, L: float) -> PlateauRun:
        return run_plateau(self.cfg, L)


def plateau_sweep(cfg: ExperimentConfig) -> List[PlateauRun]:
    return sweep(_PlateauTask(cfg), list(cfg.L_list), cfg.jobs)


__all__ = ["ExperimentConfig", "PlateauRun", "cold_start", "ball_start",
           "initial_state", "run_plateau", "plateau_confirmed", "plateau_sweep", "sweep",
           "TRANSIENT_POLICIES"]
