"""Windowed amplitude series and quasi-stationary plateau detection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..integrator import Trajectory, WindowStats


class UndersampledError(ValueError):
    """Fewer than the required samples per window."""


class PlateauNotFound(RuntimeError):
    """No quasi-stationary plateau within the available windows."""


@dataclass
class WindowSeries:
    """Per-window maxima of one action over windows of length ``2 pi / L``.

    For the fast site the maxima are of ``|I_k - window mean|``.
    """

    site: int
    window_length: float
    maxima: np.ndarray
    start_time: float = 0.0
    L: Optional[float] = None

    def __post_init__(self):
        self.maxima = np.asarray(self.maxima, dtype=float)
        if self.L is not None:
            if abs(self.window_length * abs(self.L) / (2 * math.pi) - 1) > 1e-12:
                raise ValueError("window_length * L must equal 2 pi")

    def __len__(self) -> int:
        return len(self.maxima)

    def times(self) -> np.ndarray:
        return self.start_time + self.window_length * np.arange(len(self.maxima))


MIN_SAMPLES_PER_WINDOW = 8


def window_maxima(traj: Trajectory, site: int, L: float) -> WindowSeries:
    """Window maxima of ``|I_site|`` from the stored samples of ``traj``.

    Sites are 1-based.  Only complete windows are returned.
    """
    n = traj.chain.n
    if not 1 <= site <= n:
        raise ValueError(f"site must be in 1..{n}")
    if L <= 0:
        raise ValueError("L must be positive")
    width = 2 * math.pi / L
    t = traj.times
    if len(t) < 2:
        raise UndersampledError("trajectory has fewer than two samples")
    dt = float(np.median(np.diff(t)))
    if width / dt < MIN_SAMPLES_PER_WINDOW - 1e-9:
        raise UndersampledError(
            f"{width / dt:.2f} samples per window; need {MIN_SAMPLES_PER_WINDOW}")
    rel = (t - t[0]) / width
    idx = np.floor(rel + 1e-9).astype(int)
    nwin = int(np.floor((t[-1] - t[0]) / width + 1e-9))
    keep = idx < nwin
    idx = idx[keep]
    v = traj.I[keep, site - 1]
    if site == traj.chain.k:
        counts = np.bincount(idx, minlength=nwin)
        means = np.bincount(idx, weights=v, minlength=nwin) / np.maximum(counts, 1)
        v = v - means[idx]
    out = np.zeros(nwin)
    np.maximum.at(out, idx, np.abs(v))
    return WindowSeries(site, width, out, float(t[0]), L)


def series_from_stats(stats: WindowStats, site: int, L: Optional[float] = None
                      ) -> WindowSeries:
    """Series of one site from in-kernel window statistics (every step used)."""
    return WindowSeries(site, stats.window_length, stats.maxima[:, site - 1],
                        stats.start_time, L)


def running_median(x: np.ndarray, span: int) -> np.ndarray:
    """Median of ``x[w - span + 1 .. w]`` for ``w >= span - 1``."""
    x = np.asarray(x, dtype=float)
    if len(x) < span:
        return np.empty(0)
    view = np.lib.stride_tricks.sliding_window_view(x, span)
    chunk = max(1, 2_000_000 // span)
    return np.concatenate([np.median(view[i:i + chunk], axis=1)
                           for i in range(0, len(view), chunk)])


def detect_quasi_stationary(series: WindowSeries, span: int = 50, tol: float = 0.01,
                            hold: int = 50, min_windows: int = 200
                            ) -> Tuple[float, float]:
    """Earliest plateau start and the plateau level.

    The running median over ``span`` windows is computed.  The plateau starts
    at the first window ``w`` from which the running median stays within
    ``tol`` (relative) of its value at ``w`` for ``hold`` consecutive windows;
    the reported time is the start of the median's support at ``w``.  The
    level is the median of the maxima from there on.

    Raises
    ------
    ValueError
        Fewer than ``min_windows`` windows.
    PlateauNotFound
        The condition never holds.
    """
    x = series.maxima
    if len(x) < min_windows:
        raise ValueError(f"series spans {len(x)} windows; need at least {min_windows}")
    med = running_median(x, span)
    if len(med) < hold:
        raise PlateauNotFound("series too short for the hold length")
    view = np.lib.stride_tricks.sliding_window_view(med, hold)
    chunk = max(1, 2_000_000 // hold)
    for i in range(0, len(view), chunk):
        blk = view[i:i + chunk]
        ref = blk[:, :1]
        dev = np.max(np.abs(blk - ref), axis=1)
        scale = np.abs(ref[:, 0])
        ok = np.where(scale > 0, dev < tol * scale, dev == 0)
        hits = np.flatnonzero(ok)
        if len(hits):
            first = i + int(hits[0])  # support of med[first] starts at window first
            level = float(np.median(x[first:]))
            return series.start_time + first * series.window_length, level
    raise PlateauNotFound("running median never settles within the series")


__all__ = ["WindowSeries", "window_maxima", "series_from_stats", "running_median",
           "detect_quasi_stationary", "UndersampledError", "PlateauNotFound",
           "MIN_SAMPLES_PER_WINDOW"]
