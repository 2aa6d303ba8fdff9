"""Fixed-step integration of the damped rotator chain.

The state is advanced with a splitting of the vector field into a drift
``A`` (``phi += I h``), a kick ``B`` (``I += F(phi) h``) and the exact linear
damping ``C`` of ``I_1``.  Angles and actions are kept as compensated
``(hi, lo)`` pairs, and bond angles are reduced modulo ``2 pi`` in extended
precision before the trigonometric calls, so that the fast angle may wind
up to ``~1e8`` without losing the slow signals.

The dissipation ledger records the energy removed by every ``C`` substep,
``I_1^2 (1 - exp(-2 gamma tau)) / 2``, so that ``H(t) - H(0) + dissipated(t)``
measures only the error of the conservative substeps.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numba as nb
import numpy as np

from .chain import ChainSpec, State, hamiltonian

SCHEMES = {"strang2": 0, "yoshida4": 1, "rk4": 2}
NOMINAL_ORDER = {"strang2": 2, "yoshida4": 4, "rk4": 4}


def _two_pi_parts():
    with mpmath.workdps(60):
        tp = 2 * mpmath.pi
        c1 = float(np.float32(float(tp)))
        rest = tp - c1
        c2 = float(np.float32(float(rest)))
        c3 = float(rest - c2)
    return c1, c2, c3


_C1, _C2, _C3 = _two_pi_parts()
_TWO_PI = 2.0 * math.pi
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = -(2.0 ** (1.0 / 3.0)) / (2.0 - 2.0 ** (1.0 / 3.0))


# -- kernels ---------------------------------------------------------------------


@nb.njit(cache=True)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


@nb.njit(cache=True)
def _add_comp(hi, lo, i, d):
    s, e = _two_sum(hi[i], d)
    t = lo[i] + e
    hi[i], lo[i] = _two_sum(s, t)


@nb.njit(cache=True)
def _bond(phi_hi, phi_lo, j):
    """Reduced ``phi_{j+1} - phi_j`` in [-pi, pi] (approximately)."""
    d, e = _two_sum(phi_hi[j + 1], -phi_hi[j])
    lo = (phi_lo[j + 1] - phi_lo[j]) + e
    q = np.floor(d / _TWO_PI + 0.5)
    r = ((d - q * _C1) - q * _C2) - q * _C3
    return r + lo


@nb.njit(cache=True)
def _forces(phi_hi, phi_lo, m, a, b, active, sc, out):
    n = phi_hi.shape[0]
    for i in range(n):
        out[i] = 0.0
    for j in range(n - 1):
        if not active[j]:
            continue
        psi = _bond(phi_hi, phi_lo, j)
        up = 0.0
        for q in range(m.shape[1]):
            mq = m[j, q]
            if mq == 0.0:
                continue
            up -= 2.0 * mq * (a[j, q] * math.sin(mq * psi) + b[j, q] * math.cos(mq * psi))
        up *= sc[j]
        out[j] += up
        out[j + 1] -= up


@nb.njit(cache=True)
def _energy(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc):
    n = I_hi.shape[0]
    h = 0.0
    c = 0.0
    for i in range(n):
        v = I_hi[i] + I_lo[i]
        y = 0.5 * v * v - c
        t = h + y
        c = (t - h) - y
        h = t
    for j in range(n - 1):
        if not active[j]:
            continue
        psi = _bond(phi_hi, phi_lo, j)
        u = 0.0
        for q in range(m.shape[1]):
            mq = m[j, q]
            if mq == 0.0:
                continue
            u += 2.0 * (a[j, q] * math.cos(mq * psi) - b[j, q] * math.sin(mq * psi))
        y = sc[j] * u - c
        t = h + y
        c = (t - h) - y
        h = t
    return h


@nb.njit(cache=True)
def _damp(I_hi, I_lo, gamma, tau):
    """Exact damping of I_1 over ``tau``; returns the energy removed."""
    if gamma == 0.0:
        return 0.0
    v = I_hi[0] + I_lo[0]
    f = math.exp(-gamma * tau)
    I_hi[0] = v * f
    I_lo[0] = 0.0
    return 0.5 * v * v * (-math.expm1(-2.0 * gamma * tau))


@nb.njit(cache=True)
def _strang(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc, gamma, tau, F):
    n = I_hi.shape[0]
    led = _damp(I_hi, I_lo, gamma, 0.5 * tau)
    _forces(phi_hi, phi_lo, m, a, b, active, sc, F)
    for i in range(n):
        _add_comp(I_hi, I_lo, i, 0.5 * tau * F[i])
    for i in range(n):
        _add_comp(phi_hi, phi_lo, i, tau * (I_hi[i] + I_lo[i]))
    _forces(phi_hi, phi_lo, m, a, b, active, sc, F)
    for i in range(n):
        _add_comp(I_hi, I_lo, i, 0.5 * tau * F[i])
    led += _damp(I_hi, I_lo, gamma, 0.5 * tau)
    return led


@nb.njit(cache=True)
def _strang_drift_outer(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc, gamma, tau, F):
    """Symmetric splitting C A B A C; the base of the fourth-order composition.

    With the fast drift outermost the dominant ``{T, {T, V}}`` error term has
    half the weight it has in the kick-outer ordering.
    """
    n = I_hi.shape[0]
    led = _damp(I_hi, I_lo, gamma, 0.5 * tau)
    for i in range(n):
        _add_comp(phi_hi, phi_lo, i, 0.5 * tau * (I_hi[i] + I_lo[i]))
    _forces(phi_hi, phi_lo, m, a, b, active, sc, F)
    for i in range(n):
        _add_comp(I_hi, I_lo, i, tau * F[i])
    for i in range(n):
        _add_comp(phi_hi, phi_lo, i, 0.5 * tau * (I_hi[i] + I_lo[i]))
    led += _damp(I_hi, I_lo, gamma, 0.5 * tau)
    return led


@nb.njit(cache=True)
def _rk4(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc, gamma, h, F):
    n = I_hi.shape[0]
    I0 = I_hi + I_lo
    p_hi = phi_hi.copy()
    p_lo = phi_lo.copy()
    kI = np.zeros((4, n))
    kp = np.zeros((4, n))
    kd = np.zeros(4)
    cI = I0.copy()
    coeffs = (0.0, 0.5, 0.5, 1.0)
    for s in range(4):
        if s > 0:
            c = coeffs[s]
            for i in range(n):
                cI[i] = I0[i] + c * h * kI[s - 1, i]
                p_hi[i] = phi_hi[i]
                p_lo[i] = phi_lo[i]
                _add_comp(p_hi, p_lo, i, c * h * kp[s - 1, i])
        _forces(p_hi, p_lo, m, a, b, active, sc, F)
        for i in range(n):
            kp[s, i] = cI[i]
            kI[s, i] = F[i]
        kI[s, 0] -= gamma * cI[0]
        kd[s] = gamma * cI[0] * cI[0]
    for i in range(n):
        dI = h * (kI[0, i] + 2.0 * kI[1, i] + 2.0 * kI[2, i] + kI[3, i]) / 6.0
        dp = h * (kp[0, i] + 2.0 * kp[1, i] + 2.0 * kp[2, i] + kp[3, i]) / 6.0
        _add_comp(I_hi, I_lo, i, dI)
        _add_comp(phi_hi, phi_lo, i, dp)
    return h * (kd[0] + 2.0 * kd[1] + 2.0 * kd[2] + kd[3]) / 6.0


@nb.njit(cache=True)
def _step(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc, gamma, h, scheme, F):
    if scheme == 0:
        return _strang(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc, gamma, h, F)
    if scheme == 1:
        led = _strang_drift_outer(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc,
                                  gamma, _W1 * h, F)
        led += _strang_drift_outer(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc,
                                   gamma, _W0 * h, F)
        led += _strang_drift_outer(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc,
                                   gamma, _W1 * h, F)
        return led
    return _rk4(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc, gamma, h, F)


@nb.njit(cache=True)
def _smoothstep(x):
    return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)


@nb.njit(cache=True)
def _run(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, ramped, ramp_steps, gamma, h,
         nsteps, scheme, stride, kidx, wsteps, s_I, s_phi, s_H, s_D, w_max, w_mean,
         w_D, w_sq):
    """Advance ``nsteps``; fill samples every ``stride`` steps and window stats.

    During the first ``ramp_steps`` steps the bonds flagged in ``ramped`` are
    switched on smoothly.  Returns ``(status, ledger_hi, ledger_lo)``; status 1
    flags a non-finite state.
    """
    n = I_hi.shape[0]
    F = np.zeros(n)
    sc = np.ones(n - 1)
    if ramp_steps > 0:
        for j in range(n - 1):
            if ramped[j]:
                sc[j] = 0.0
    led = 0.0
    led_c = 0.0
    ns = 0
    if stride > 0:
        for i in range(n):
            s_I[0, i] = I_hi[i] + I_lo[i]
            s_phi[0, i] = phi_hi[i] + phi_lo[i]
        s_H[0] = _energy(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc)
        s_D[0] = 0.0
        ns = 1
    nw = w_max.shape[0]
    buf = np.zeros(max(wsteps, 1))
    wmax = np.zeros(n)
    wsq = np.zeros(n)
    w = 0
    wpos = 0
    wled = 0.0
    wled_c = 0.0
    for step in range(nsteps):
        if step < ramp_steps:
            f = _smoothstep((step + 0.5) / ramp_steps)
            for j in range(n - 1):
                if ramped[j]:
                    sc[j] = f
        elif step == ramp_steps:
            for j in range(n - 1):
                sc[j] = 1.0
        d = _step(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc, gamma, h, scheme, F)
        y = d - led_c
        t = led + y
        led_c = (t - led) - y
        led = t
        if not (math.isfinite(I_hi[0]) and math.isfinite(I_hi[n - 1])
                and math.isfinite(phi_hi[0]) and math.isfinite(phi_hi[n - 1])):
            return 1, led, -led_c
        if wsteps > 0 and w < nw:
            y = d - wled_c
            t = wled + y
            wled_c = (t - wled) - y
            wled = t
            for i in range(n):
                v = I_hi[i] + I_lo[i]
                av = abs(v)
                if i != kidx and av > wmax[i]:
                    wmax[i] = av
                wsq[i] += v * v
            buf[wpos] = I_hi[kidx] + I_lo[kidx]
            wpos += 1
            if wpos == wsteps:
                mean = 0.0
                for q in range(wsteps):
                    mean += buf[q]
                mean /= wsteps
                dev = 0.0
                for q in range(wsteps):
                    e = abs(buf[q] - mean)
                    if e > dev:
                        dev = e
                for i in range(n):
                    w_max[w, i] = wmax[i]
                    w_sq[w, i] = wsq[i] / wsteps
                    wmax[i] = 0.0
                    wsq[i] = 0.0
                w_max[w, kidx] = dev
                w_mean[w] = mean
                w_D[w] = wled - wled_c
                wled = 0.0
                wled_c = 0.0
                w += 1
                wpos = 0
        if stride > 0 and (step + 1) % stride == 0:
            for i in range(n):
                s_I[ns, i] = I_hi[i] + I_lo[i]
                s_phi[ns, i] = phi_hi[i] + phi_lo[i]
            s_H[ns] = _energy(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, sc)
            s_D[ns] = led - led_c
            ns += 1
    return 0, led, -led_c


# -- public API --------------------------------------------------------------------


class IntegrationError(RuntimeError):
    """Non-finite state encountered; the damped chain cannot blow up, so this is a bug."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    Parameters
    ----------
    scheme : {"strang2", "yoshida4", "rk4"}
        ``strang2`` is C(h/2) B(h/2) A(h) B(h/2) C(h/2).  ``yoshida4`` is the
        triple-jump composition of the drift-outer symmetric splitting.
    steps_per_fast_period : int
        ``N_pp``; the step is ``2 pi / (N_pp max(L, 1))``.
    t_final : float
        The run takes ``ceil(t_final / h)`` whole steps, so it may end up to
        one step later; ``Trajectory.times[-1]`` is the actual end time.
    sample_stride : int, optional
        Steps between stored samples; defaults to ``N_pp // 8``.  Zero stores
        only the initial and final states.
    compensated_sums : bool
        Kept for configuration round-trips; the kernel always compensates.
    window_stats : bool
        Collect per-window statistics over windows of ``N_pp`` steps.
    """

    scheme: str = "yoshida4"
    steps_per_fast_period: int = 64
    t_final: float = 10.0
    sample_stride: Optional[int] = None
    compensated_sums: bool = True
    window_stats: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")
        if self.steps_per_fast_period < 16:
            raise ValueError("steps_per_fast_period must be at least 16 (h L <= 2 pi / 16)")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.sample_stride is not None and self.sample_stride < 0:
            raise ValueError("sample_stride must be non-negative")

    @property
    def stride(self) -> int:
        if self.sample_stride is None:
            return max(1, self.steps_per_fast_period // 8)
        return self.sample_stride

    def step_size(self, L: float) -> float:
        return 2 * math.pi / (self.steps_per_fast_period * max(abs(L), 1.0))


@dataclass
class WindowStats:
    """Per-window statistics over consecutive windows of ``2 pi / L``.

    ``maxima[w, i]`` is ``max |I_i|`` for ``i != k`` and ``max |I_k - mean|``
    for the fast site; ``mean_sq`` is the window mean of ``I_i^2``.
    """

    window_length: float
    start_time: float
    maxima: np.ndarray
    mean_k: np.ndarray
    dissipated: np.ndarray
    mean_sq: np.ndarray

    @property
    def n_windows(self) -> int:
        return self.maxima.shape[0]

    def times(self) -> np.ndarray:
        """Window start times."""
        return self.start_time + self.window_length * np.arange(self.n_windows)

    def extend(self, other: "WindowStats") -> "WindowStats":
        """Concatenate the windows of a continuation run."""
        return WindowStats(self.window_length, self.start_time,
                           np.concatenate([self.maxima, other.maxima]),
                           np.concatenate([self.mean_k, other.mean_k]),
                           np.concatenate([self.dissipated, other.dissipated]),
                           np.concatenate([self.mean_sq, other.mean_sq]))


@dataclass
class Trajectory:
    chain: ChainSpec
    config: IntegratorConfig
    L: float
    h: float
    times: np.ndarray
    I: np.ndarray
    phi: np.ndarray
    H: np.ndarray
    dissipated: np.ndarray
    H0: float
    final: State
    final_dissipated: float
    windows: Optional[WindowStats] = None
    decoupled: bool = False

    @property
    def states(self):
        return [State(self.I[s], self.phi[s]) for s in range(len(self.times))]

    def to_csv(self) -> str:
        return trajectory_csv(self)


def _default_L(chain: ChainSpec, state: State) -> float:
    return max(abs(float(state.I[chain.k - 1])), 1.0)


def _fast_bonds(chain: ChainSpec) -> np.ndarray:
    """Flags for the bonds ``k-1`` and ``k`` (1-based) that touch the fast site."""
    flags = np.zeros(chain.n - 1, dtype=np.bool_)
    for j in (chain.k - 2, chain.k - 1):
        if 0 <= j < chain.n - 1:
            flags[j] = True
    return flags


def _active(chain: ChainSpec, decoupled: bool) -> np.ndarray:
    act = np.ones(chain.n - 1, dtype=np.bool_)
    if decoupled:
        act &= ~_fast_bonds(chain)
    return act


def _integrate(chain: ChainSpec, state0: State, cfg: IntegratorConfig,
               L: Optional[float], decoupled: bool, t0: float = 0.0,
               ramp_time: float = 0.0) -> Trajectory:
    I0 = np.asarray(state0.I, dtype=float)
    p0 = np.asarray(state0.phi, dtype=float)
    if I0.shape != (chain.n,) or p0.shape != (chain.n,):
        raise ValueError(f"state must have {chain.n} actions and angles")
    if not (np.all(np.isfinite(I0)) and np.all(np.isfinite(p0))):
        raise ValueError("initial state must be finite")
    L = _default_L(chain, state0) if L is None else float(L)
    h = cfg.step_size(L)
    nsteps = int(math.ceil(cfg.t_final / h - 1e-9)) if cfg.t_final > 0 else 0
    ramp_steps = int(math.ceil(ramp_time / h - 1e-9)) if ramp_time > 0 else 0
    m, a, b = chain.potential_arrays()
    active = _active(chain, decoupled)
    n = chain.n
    stride = cfg.stride
    ns = nsteps // stride + 1 if stride > 0 else 0
    s_I = np.zeros((ns, n))
    s_phi = np.zeros((ns, n))
    s_H = np.zeros(ns)
    s_D = np.zeros(ns)
    wsteps = cfg.steps_per_fast_period if cfg.window_stats else 0
    nw = nsteps // wsteps if wsteps else 0
    w_max = np.zeros((nw, n))
    w_mean = np.zeros(nw)
    w_D = np.zeros(nw)
    w_sq = np.zeros((nw, n))
    I_hi, I_lo = I0.copy(), np.zeros(n)
    phi_hi, phi_lo = p0.copy(), np.zeros(n)
    status, led, led_lo = _run(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active,
                               _fast_bonds(chain), ramp_steps, float(chain.gamma), h,
                               nsteps, SCHEMES[cfg.scheme], stride, chain.k - 1, wsteps,
                               s_I, s_phi, s_H, s_D, w_max, w_mean, w_D, w_sq)
    if status:
        raise IntegrationError("non-finite state during integration")
    ones = np.ones(n - 1)
    zeros = np.zeros(n)
    H0 = float(_energy(I0, zeros, p0, zeros, m, a, b, active, ones))
    final = State(I_hi + I_lo, phi_hi + phi_lo)
    if stride == 0:
        times = np.array([t0, t0 + nsteps * h])
        s_I = np.stack([I0, final.I])
        s_phi = np.stack([p0, final.phi])
        H1 = float(_energy(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, ones))
        s_H = np.array([H0, H1])
        s_D = np.array([0.0, led + led_lo])
    else:
        times = t0 + h * stride * np.arange(ns)
    windows = None
    if wsteps:
        windows = WindowStats(window_length=wsteps * h, start_time=t0, maxima=w_max,
                              mean_k=w_mean, dissipated=w_D, mean_sq=w_sq)
    return Trajectory(chain=chain, config=cfg, L=L, h=h, times=times, I=s_I, phi=s_phi,
                      H=s_H, dissipated=s_D, H0=H0, final=final,
                      final_dissipated=float(led + led_lo), windows=windows,
                      decoupled=decoupled)


def step(chain: ChainSpec, state: State, h: float, scheme: str = "strang2") -> State:
    """One step of the chosen scheme."""
    if not h > 0:
        raise ValueError("h must be positive")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    m, a, b = chain.potential_arrays()
    active = _active(chain, False)
    I_hi = np.asarray(state.I, dtype=float).copy()
    phi_hi = np.asarray(state.phi, dtype=float).copy()
    I_lo = np.zeros_like(I_hi)
    phi_lo = np.zeros_like(phi_hi)
    F = np.zeros(chain.n)
    _step(I_hi, I_lo, phi_hi, phi_lo, m, a, b, active, np.ones(chain.n - 1),
          float(chain.gamma), float(h), SCHEMES[scheme], F)
    I = I_hi + I_lo
    phi = phi_hi + phi_lo
    if not (np.all(np.isfinite(I)) and np.all(np.isfinite(phi))):
        raise IntegrationError("non-finite state after step")
    return State(I, phi)


def integrate(chain: ChainSpec, state0: State, cfg: IntegratorConfig,
              L: Optional[float] = None, t0: float = 0.0) -> Trajectory:
    """Integrate the full damped chain.

    ``L`` sets the step size ``2 pi / (N_pp L)``; it defaults to ``|I_k(0)|``.
    ``t0`` only labels the sample times, which is convenient for continuing a run.
    """
    return _integrate(chain, state0, cfg, L, decoupled=False, t0=t0)


def integrate_decoupled(chain: ChainSpec, state0: State, cfg: IntegratorConfig,
                        L: Optional[float] = None, t0: float = 0.0) -> Trajectory:
    """Integrate the comparison system without the two bonds at the fast site."""
    return _integrate(chain, state0, cfg, L, decoupled=True, t0=t0)


def prepare_quasi_stationary(chain: ChainSpec, L: float, ramp_time: float = 200.0,
                             cfg: Optional[IntegratorConfig] = None) -> State:
    """Start state on the quasi-stationary regime by adiabatic switching.

    Begins from ``I = L e_k`` and ``phi = 0`` with the two bonds at the fast
    site switched off, and turns them on with a ``C^2`` ramp over
    ``ramp_time``.  The slow subsystems then follow the forced response
    instead of carrying free oscillations that the one-sided damping removes
    only very slowly.
    """
    if ramp_time <= 0:
        raise ValueError("ramp_time must be positive")
    cfg = cfg or IntegratorConfig()
    cfg = IntegratorConfig(cfg.scheme, cfg.steps_per_fast_period, ramp_time,
                           sample_stride=0)
    I = np.zeros(chain.n)
    I[chain.k - 1] = L
    tr = _integrate(chain, State(I, np.zeros(chain.n)), cfg, L, decoupled=False,
                    ramp_time=ramp_time)
    return tr.final


def energy_balance_residual(traj: Trajectory) -> float:
    """``max_t |H(t) - H(0) + dissipated(t)|`` over the samples."""
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    return float(np.max(np.abs(traj.H - traj.H0 + traj.dissipated)))


def trajectory_csv(traj: Trajectory) -> str:
    """CSV text with header ``t,I1..In,phi1..phin,H,dissipated``."""
    n = traj.chain.n
    header = (["t"] + [f"I{i}" for i in range(1, n + 1)]
              + [f"phi{i}" for i in range(1, n + 1)] + ["H", "dissipated"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for s in range(len(traj.times)):
        row = [traj.times[s], *traj.I[s], *traj.phi[s], traj.H[s], traj.dissipated[s]]
        w.writerow([format(float(v), ".17g") for v in row])
    return buf.getvalue()


__all__ = ["IntegratorConfig", "Trajectory", "WindowStats", "IntegrationError",
           "step", "integrate", "integrate_decoupled", "prepare_quasi_stationary", "energy_balance_residual",
           "trajectory_csv", "SCHEMES", "NOMINAL_ORDER"]
