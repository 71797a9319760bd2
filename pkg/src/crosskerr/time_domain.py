"""Stochastic time-domain integration of the linear Langevin systems.

Everything runs in normalized time ``tau = 2 Omega t``. The scheme is
Euler-Maruyama::

    x[k+1] = x[k] + dt (D x[k] + c(tau_k)) + forcing[k]

For a constant drift the recursion is diagonalized once and each mode is run
through :func:`scipy.signal.lfilter`, which evaluates the same recursion in
compiled code. Near-defective drifts fall back to a plain loop.

Noise increments ``dY`` are complex with independent real and imaginary
parts of variance ``dt/2`` each, so that a unit-variance-per-unit-time input
has the normalized density 1/2 under :func:`estimate_psd`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.linalg import expm
from scipy.signal import lfilter, welch

from .errors import GridError, InvalidParameterError, StatisticsError, StepTooLargeError
from .operator_algebra import BlockSystem
from .params import NormalizedParams
from .spectra import SpectrumGrid, VariationSystem
from .steady_state import SteadyState

STABILITY_MARGIN = 0.1
_MODAL_COND_LIMIT = 1e8


@dataclass
class TimeTrace:
    tau: np.ndarray
    states: np.ndarray
    seed: Optional[int]
    dt: float
    increments: Optional[np.ndarray] = None
    basis: tuple = ()

    @property
    def n_steps(self) -> int:
        return self.tau.size - 1


def noise_increments(seed: Optional[int], n_steps: int, dt: float, n_streams: int = 1) -> np.ndarray:
    """Complex Wiener increments, shape ``(n_streams, n_steps)``."""
    rng = np.random.default_rng(seed)
    parts = rng.normal(0.0, np.sqrt(0.5 * dt), size=(n_streams, 2, n_steps))
    return parts[:, 0] + 1j * parts[:, 1]


def _check_step(drift: np.ndarray, dt: float, n_steps: int):
    if dt <= 0 or n_steps < 1:
        raise InvalidParameterError("dt must be positive and n_steps >= 1")
    rate = np.abs(np.linalg.eigvals(drift)).max()
    if dt * rate >= STABILITY_MARGIN:
        raise StepTooLargeError(
            f"dt*max|eig| = {dt * rate:.3g} exceeds the explicit-scheme margin {STABILITY_MARGIN}")


def euler_linear(drift: np.ndarray, x0: np.ndarray, forcing: np.ndarray, dt: float) -> np.ndarray:
    """Run ``x[k+1] = (I + dt D) x[k] + forcing[k]``; returns ``n_steps + 1`` states."""
    dim = drift.shape[0]
    n_steps = forcing.shape[0]
    step = np.eye(dim) + dt * drift
    mu, vecs = np.linalg.eig(step)
    if np.linalg.cond(vecs) < _MODAL_COND_LIMIT:
        inv = np.linalg.inv(vecs)
        modal_forcing = forcing @ inv.T
        y0 = inv @ x0
        modes = np.empty((n_steps + 1, dim), dtype=complex)
        for i in range(dim):
            seq = np.concatenate([[y0[i]], modal_forcing[:, i]])
            modes[:, i] = lfilter([1.0], [1.0, -mu[i]], seq)
        return modes @ vecs.T
    states = np.empty((n_steps + 1, dim), dtype=complex)
    states[0] = x0
    for k in range(n_steps):
        states[k + 1] = step @ states[k] + forcing[k]
    return states


def euler_linear_reference(drift, x0, forcing, dt):
    """Plain-loop version of :func:`euler_linear`, kept as a check."""
    step = np.eye(drift.shape[0]) + dt * drift
    states = np.empty((forcing.shape[0] + 1, drift.shape[0]), dtype=complex)
    states[0] = x0
    for k in range(forcing.shape[0]):
        states[k + 1] = step @ states[k] + forcing[k]
    return states


def variation_input_matrix(vs: VariationSystem, shared_conjugate: bool = True) -> np.ndarray:
    """Columns multiply ``(y, y^dagger)`` in the variation input vector."""
    b = vs.b_bar
    if shared_conjugate:
        return np.stack([vs.input_vector, np.zeros(3)], axis=1)
    return np.array([[b, 0.0], [0.0, np.conj(b)], [np.conj(b), b]])


def _variation_inputs(vs, dY, shared_conjugate):
    """Input increments ``A_in dtau`` for each step, shape (n_steps, 3)."""
    cols = variation_input_matrix(vs, shared_conjugate)
    if shared_conjugate:
        return np.outer(dY, cols[:, 0])
    return np.outer(dY, cols[:, 0]) + np.outer(np.conj(dY), cols[:, 1])


def integrate_variations(vs: VariationSystem, dt: float, n_steps: int, seed: Optional[int] = 0,
                         x0=None, noise: bool = True, increments: Optional[np.ndarray] = None,
                         shared_conjugate: bool = True) -> TimeTrace:
    """Euler-Maruyama for ``d dA = N dA dtau - sqrt(gamma) A_in dtau``.

    ``increments`` overrides the seeded noise (length ``n_steps``), which lets
    runs at different ``dt`` share one Brownian path.
    """
    vs.require_stable()
    _check_step(vs.N, dt, n_steps)
    x0 = np.zeros(3, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex)
    if increments is not None:
        dY = np.asarray(increments, dtype=complex)
        if dY.shape != (n_steps,):
            raise InvalidParameterError(f"increments must have shape ({n_steps},)")
    elif noise:
        dY = noise_increments(seed, n_steps, dt)[0]
    else:
        dY = np.zeros(n_steps, dtype=complex)
    forcing = -np.sqrt(vs.gamma) * _variation_inputs(vs, dY, shared_conjugate)
    states = euler_linear(vs.N, x0, forcing, dt)
    return TimeTrace(tau=dt * np.arange(n_steps + 1), states=states, seed=seed, dt=dt,
                     increments=dY, basis=("dd", "dd+", "dm"))


def output_trace(vs: VariationSystem, trace: TimeTrace, shared_conjugate: bool = True) -> TimeTrace:
    """Output field samples ``A_in - sqrt(gamma) dA`` (length ``n_steps``)."""
    inputs = _variation_inputs(vs, trace.increments, shared_conjugate) / trace.dt
    out = inputs - np.sqrt(vs.gamma) * trace.states[:-1]
    return TimeTrace(tau=trace.tau[:-1], states=out, seed=trace.seed, dt=trace.dt,
                     increments=trace.increments, basis=tuple(f"{b}_out" for b in trace.basis))


# --- six-dimensional truncated system ----------------------------------------------

def six_drift(bs: BlockSystem) -> np.ndarray:
    return bs.drift[:6, :6]


def six_constant_drive(ss: SteadyState, params: NormalizedParams) -> np.ndarray:
    """``-i (alpha/2) A_c`` with the pump number operator replaced by ``n_bar``."""
    n = ss.n_bar
    A_c = np.array([0.0, 1.0, -1.0, 0.0, n, -n])
    return -0.5j * params.alpha * A_c


def six_noise_matrix(ss: SteadyState, params: NormalizedParams) -> np.ndarray:
    """``-[sqrt Gamma] A_in`` per unit increment of ``(y_probe, y_pump)``; shape (6, 2).

    Multiplicative operators are replaced by their silent mean values and the
    conjugate probe input is identified with the input.
    """
    b = ss.b_bar
    a = np.sqrt(ss.n_bar)
    n, m, d = ss.n_bar, ss.m_bar, ss.d_bar
    sg, sl = np.sqrt(params.gamma1), np.sqrt(params.lam)
    probe = sg * np.array([b + np.conj(b), b, np.conj(b),
                           n * (b + np.conj(b)), n * b, n * np.conj(b)])
    pump = sl * 2 * a * np.array([0.0, 0.0, 0.0, m, d, np.conj(d)])
    return -np.stack([probe, pump], axis=1)


def integrate_truncated_six(bs: BlockSystem, ss: SteadyState, params: NormalizedParams,
                            dt: float, n_steps: int, seed: Optional[int] = 0,
                            drive: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                            x0=None, noise: bool = True) -> TimeTrace:
    """Euler-Maruyama on the six-dimensional truncated system.

    ``drive(tau)`` receives the array of step times and returns the
    inhomogeneity (broadcastable to ``(n_steps, 6)``); by default it is the
    constant silent drive of :func:`six_constant_drive`.
    """
    D = six_drift(bs)
    _check_step(D, dt, n_steps)
    tau = dt * np.arange(n_steps + 1)
    x0 = np.zeros(6, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex)
    c = six_constant_drive(ss, params) if drive is None else drive(tau[:-1])
    forcing = np.broadcast_to(dt * np.asarray(c, dtype=complex), (n_steps, 6)).copy()
    dY = None
    if noise:
        dY = noise_increments(seed, n_steps, dt, n_streams=2)
        forcing += dY.T @ six_noise_matrix(ss, params).T
    states = euler_linear(D, x0, forcing, dt)
    return TimeTrace(tau=tau, states=states, seed=seed, dt=dt, increments=dY,
                     basis=("m", "d", "d+", "nm", "nd", "nd+"))


def closed_form_six(bs: BlockSystem, ss: SteadyState, params: NormalizedParams, tau: float,
                    x0=None) -> np.ndarray:
    """Noise-free explicit solution ``e^{D tau} x0 + int_0^tau e^{D (tau - s)} c ds``.

    The integral is evaluated exactly through the exponential of the augmented
    matrix ``[[D, c], [0, 0]]``.
    """
    D = six_drift(bs)
    c = six_constant_drive(ss, params)
    x0 = np.zeros(6, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex)
    aug = np.zeros((7, 7), dtype=complex)
    aug[:6, :6] = D
    aug[:6, 6] = c
    E = expm(aug * tau)
    return E[:6, :6] @ x0 + E[:6, 6]


def six_fixed_point(bs: BlockSystem, ss: SteadyState, params: NormalizedParams) -> np.ndarray:
    return -np.linalg.solve(six_drift(bs), six_constant_drive(ss, params))


# --- spectral estimation ----------------------------------------------------------

def estimate_psd(traces: Iterable[TimeTrace], channel: int = 0, nperseg: Optional[int] = None,
                 window: str = "boxcar", discard: int = 0) -> SpectrumGrid:
    """Ensemble-averaged periodogram of one channel.

    Normalized so that white input with unit variance per unit time is flat at
    1/2. Frequencies are angular (``w = 2 pi f``) and sorted ascending. With
    ``nperseg`` each trace is split into Welch segments (half overlap).
    ``discard`` drops leading samples (burn-in). ``traces`` may be a generator,
    in which case only one trace is held in memory at a time.
    """
    dt = length = None
    spectra = []
    for tr in traces:
        if dt is None:
            dt, length = tr.dt, tr.states.shape[0]
            n = length - discard
            nperseg = n if nperseg is None else int(nperseg)
            noverlap = 0 if nperseg == n else nperseg // 2
        elif tr.dt != dt or tr.states.shape[0] != length:
            raise GridError("traces must share step size and length")
        x = tr.states[discard:, channel]
        f, P = welch(x, fs=1.0 / dt, window=window, nperseg=nperseg, noverlap=noverlap,
                     return_onesided=False, detrend=False, scaling="density")
        spectra.append(P)
    if len(spectra) < 2:
        raise StatisticsError("spectral averaging needs at least two traces")
    spectra = np.array(spectra)
    order = np.argsort(f)
    mean = 0.5 * spectra.mean(axis=0)[order]
    spread = 0.5 * spectra.std(axis=0, ddof=1)[order]
    return SpectrumGrid(2 * np.pi * f[order], mean,
                        {"quantity": "psd", "n_traces": len(spectra), "std": spread,
                         "stderr": spread / np.sqrt(len(spectra)), "nperseg": nperseg})
