"""Frequency-domain engine for the probe fluctuations.

Variations are ordered ``(dd, dd^dagger, dm)``, unlike the ``(m, d, d^dagger)``
block order of :mod:`crosskerr.operator_algebra`; :data:`VARIATION_FROM_BLOCK`
maps one onto the other.

Fourier convention
------------------
Frequencies ``w`` live on a uniform grid; the conjugate time grid has spacing
``dt = 2 pi / (n dw)`` and places ``t = 0`` on sample ``n // 2``. The pair used
by the spectral recovery is::

    F{c}(w)    = (1 / 2 pi) int c(t) exp(+i w t) dt
    F^-1{S}(t) =            int S(w) exp(-i w t) dw

discretized so that ``F(F^-1(S)) == S`` on the grid to rounding.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (GridError, InstabilityError, PhaseUndefinedError,
                     ResolventSingularError)
from .params import NormalizedParams
from .steady_state import SteadyState

I3 = np.eye(3)
I2 = np.eye(2)
DEFAULT_RANGE = (-4.0, 4.0)
DEFAULT_POINTS = 100_000
MIN_RECOVERY_POINTS = 2 ** 10

#: index into (m, d, d^dagger) for each of (dd, dd^dagger, dm)
VARIATION_FROM_BLOCK = np.array([1, 2, 0])


@dataclass
class SpectrumGrid:
    w: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return int(self.w.size)

    @property
    def range(self) -> tuple[float, float]:
        return float(self.w[0]), float(self.w[-1])

    @property
    def dw(self) -> float:
        return float(self.w[1] - self.w[0])

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        steps = np.diff(self.w)
        return bool(steps.size and np.all(steps > 0) and np.ptp(steps) <= rtol * steps.mean())

    def is_symmetric(self, rtol: float = 1e-9) -> bool:
        scale = max(np.abs(self.w).max(), 1.0)
        return bool(np.abs(self.w + self.w[::-1]).max() <= rtol * scale)

    def with_values(self, values, **meta) -> "SpectrumGrid":
        return SpectrumGrid(self.w, values, {**self.meta, **meta})


def make_grid(w_min: float = DEFAULT_RANGE[0], w_max: float = DEFAULT_RANGE[1],
              n_points: int = DEFAULT_POINTS) -> SpectrumGrid:
    if n_points < 2:
        raise GridError(f"grid needs at least two points, got {n_points}")
    if not w_max > w_min:
        raise GridError(f"empty frequency range [{w_min}, {w_max}]")
    return SpectrumGrid(np.linspace(w_min, w_max, int(n_points)), np.zeros(int(n_points)))


def _require_transform_grid(grid: SpectrumGrid):
    if grid.n_points < MIN_RECOVERY_POINTS:
        raise GridError(f"recovery needs >= {MIN_RECOVERY_POINTS} points, got {grid.n_points}")
    if not grid.is_uniform():
        raise GridError("frequency grid is not uniform")
    if not grid.is_symmetric():
        raise GridError("frequency grid is not symmetric about w = 0")


# --- discrete Fourier pair ---------------------------------------------------

def time_grid(w: np.ndarray) -> np.ndarray:
    n = w.size
    dw = w[1] - w[0]
    dt = 2 * np.pi / (n * dw)
    return (np.arange(n) - n // 2) * dt


def _phases(w):
    n = w.size
    dw = w[1] - w[0]
    dt = 2 * np.pi / (n * dw)
    t0 = -(n // 2) * dt
    idx = np.arange(n)
    return n, dw, dt, t0, idx


def inverse_transform(S: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``int S(w) exp(-i w t) dw`` sampled on :func:`time_grid`."""
    n, dw, dt, t0, idx = _phases(w)
    w0 = w[0]
    inner = np.fft.fft(S * np.exp(-1j * idx * dw * t0))
    return dw * np.exp(-1j * w0 * t0) * np.exp(-1j * w0 * idx * dt) * inner


def forward_transform(c: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``(1/2pi) int c(t) exp(+i w t) dt`` for ``c`` sampled on :func:`time_grid`."""
    n, dw, dt, t0, idx = _phases(w)
    w0 = w[0]
    inner = n * np.fft.ifft(c * np.exp(1j * w0 * idx * dt))
    return dt / (2 * np.pi) * np.exp(1j * w0 * t0) * np.exp(1j * idx * dw * t0) * inner


# --- variation system ---------------------------------------------------------

@dataclass(frozen=True)
class VariationSystem:
    N: np.ndarray
    b_bar: complex
    gamma: float
    alpha: float = 0.0
    detuning: float = 1.0  # 1 + beta n_bar

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.N)

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))

    @property
    def input_vector(self) -> np.ndarray:
        """Silent amplitudes multiplying y_in when y_in^dagger is identified with y_in."""
        b = self.b_bar
        return np.array([b, np.conj(b), b + np.conj(b)])

    def require_stable(self):
        if not self.stable:
            raise InstabilityError(
                f"variation drift has eigenvalues with non-negative real part: {self.eigenvalues}")


def variation_matrix(alpha: float, detuning: float, gamma: float) -> np.ndarray:
    return np.array([
        [-1j * detuning - gamma, 0.0, -1j * alpha],
        [0.0, 1j * detuning - gamma, 1j * alpha],
        [2j * alpha, -2j * alpha, -gamma],
    ], dtype=complex)


def build_variation(ss: SteadyState, params: NormalizedParams) -> VariationSystem:
    detuning = 1.0 + params.beta * ss.n_bar
    N = variation_matrix(params.alpha, detuning, params.gamma1)
    return VariationSystem(N=N, b_bar=ss.b_bar, gamma=params.gamma1,
                           alpha=params.alpha, detuning=detuning)


def _resolvent(drift: np.ndarray, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    dim = drift.shape[0]
    shifted = drift[None, :, :] - 1j * w.reshape(-1)[:, None, None] * np.eye(dim)
    try:
        R = np.linalg.inv(shifted)
    except np.linalg.LinAlgError:
        raise ResolventSingularError("N - iwI is singular on the frequency grid") from None
    if not np.all(np.isfinite(R)):
        raise ResolventSingularError("N - iwI is singular on the frequency grid")
    return R.reshape(w.shape + (dim, dim))


def resolvent(vs: VariationSystem, w) -> np.ndarray:
    """``(N - iwI)^-1``; scalar ``w`` gives 3x3, an array gives ``w.shape + (3, 3)``."""
    return _resolvent(vs.N, w)


def scattering_S(vs: VariationSystem, w) -> np.ndarray:
    if vs.gamma == 0:
        return np.broadcast_to(I3, np.shape(w) + (3, 3)).astype(complex)
    return I3 - vs.gamma * resolvent(vs, w)


def reflection_sigma(vs: VariationSystem, w) -> np.ndarray:
    if vs.gamma == 0:
        return np.broadcast_to(I3, np.shape(w) + (3, 3)).astype(complex)
    return I3 + vs.gamma * resolvent(vs, w)


def output_spectrum(vs: VariationSystem, w, channel: int = 0,
                    shared_conjugate: bool = True) -> np.ndarray:
    """Output noise density of one variation channel driven by vacuum (S_YY = 1/2).

    With ``shared_conjugate`` the conjugate input is the same process as the
    input and the amplitudes add coherently; otherwise the two are independent
    and their densities add.
    """
    vs.require_stable()
    S = scattering_S(vs, w)
    b = vs.b_bar
    if shared_conjugate:
        return 0.5 * np.abs(S[..., channel, :] @ vs.input_vector) ** 2
    u_y = np.array([b, 0.0, np.conj(b)])
    u_yc = np.array([0.0, np.conj(b), b])
    return 0.5 * (np.abs(S[..., channel, :] @ u_y) ** 2 + np.abs(S[..., channel, :] @ u_yc) ** 2)


# --- noise spectral densities -------------------------------------------------

def _conv_on_grid(f: np.ndarray, g: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``int f(w') g(w - w') dw'`` for two functions sampled on the same uniform grid."""
    from scipy.signal import fftconvolve

    dw = w[1] - w[0]
    full = fftconvolve(f, g) * dw
    w_full = 2 * w[0] + dw * np.arange(full.size)
    return np.interp(w, w_full, full.real) + 1j * np.interp(w, w_full, full.imag)


def sdd(vs: VariationSystem, grid: SpectrumGrid, amplitude: Optional[np.ndarray] = None) -> SpectrumGrid:
    """Noise density of ``d = b^2/2``.

    With ``amplitude=None`` the constant silent amplitude ``b_bar`` multiplies the
    scattering elements. Passing the frequency-dependent pair ``(b(w), b*(w))``
    (see :func:`multiplicative_amplitude`) switches to the convolution form.
    """
    vs.require_stable()
    S = scattering_S(vs, grid.w)
    s_d = S[:, 0, 0] + S[:, 0, 2]
    s_dc = S[:, 0, 1] + S[:, 0, 2]
    if amplitude is None:
        b = vs.b_bar
        values = 0.5 * np.abs(b * s_d + np.conj(b) * s_dc) ** 2
        return grid.with_values(values, quantity="S_DD", multiplicative="constant")
    b_w, bc_w = amplitude
    total = _conv_on_grid(b_w, s_d, grid.w) + _conv_on_grid(bc_w, s_dc, grid.w)
    values = 0.5 * np.abs(total) ** 2 / vs.gamma ** 2
    return grid.with_values(values, quantity="S_DD", multiplicative="convolution")


def recover_sbb(sdd_grid: SpectrumGrid) -> SpectrumGrid:
    """Probe-field density from the density of its square.

    ``S_BB = 1/2 + F{ sqrt( F^-1{S_DD - 1/2} / 2 ) }`` with the principal complex
    square root taken pointwise in time. The real part is returned; the
    largest discarded imaginary part is kept in ``meta['max_imag']``.
    """
    _require_transform_grid(sdd_grid)
    values = np.asarray(sdd_grid.values)
    if np.iscomplexobj(values) or values.ndim != 1:
        raise GridError("S_DD must be a real 1-D density")
    w = sdd_grid.w
    corr = 0.5 * inverse_transform(values - 0.5, w)
    s_bb = 0.5 + forward_transform(np.sqrt(corr), w)
    return SpectrumGrid(w, s_bb.real, {**sdd_grid.meta, "quantity": "S_BB",
                                       "max_imag": float(np.abs(s_bb.imag).max())})


def compose_sdd(sbb_values: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`recover_sbb`: ``S_DD = 1/2 + F{ 2 (F^-1{S_BB - 1/2})^2 }``.

    Only a true inverse where the time-domain correlation stays on the
    principal square-root branch (e.g. positive real correlations).
    """
    corr = inverse_transform(np.asarray(sbb_values) - 0.5, w)
    return 0.5 + forward_transform(2 * corr ** 2, w)


def symmetrize(s: SpectrumGrid) -> SpectrumGrid:
    if not s.is_symmetric():
        raise GridError("symmetrization needs a grid symmetric about w = 0")
    v = np.asarray(s.values)
    return s.with_values(0.5 * (v + v[::-1]), symmetrized=True)


# --- reflection ----------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSolution:
    phi: float
    exp_plus: complex   # e^{+2 i phi}
    exp_minus: complex  # e^{-2 i phi}
    half_R2: complex
    half_R2_conj: complex
    residual: float
    rejected_residual: float
    unimodularity: float
    tie: bool = False

    @property
    def reflectivity(self) -> float:
        return 2.0 * abs(self.half_R2)


def _phase_candidates(sig):
    """Vectorized reflection-phase branch data for ``sig`` of shape (..., 3, 3)."""
    s11, s12, s13 = sig[..., 0, 0], sig[..., 0, 1], sig[..., 0, 2]
    s21, s22, s23 = sig[..., 1, 0], sig[..., 1, 1], sig[..., 1, 2]
    den = s11 - np.conj(s21) - s12 + np.conj(s22)
    X = (np.conj(s23) - s13) / den
    root = np.sqrt(1 + X * X)
    z = np.stack([X + root, X - root])
    line1 = 0.5 * (s11 * z + s12 / z) + s13
    line2 = 0.5 * (s21 * z + s22 / z) + s23
    res = np.abs(line2 - np.conj(line1))
    return den, z, line1, line2, res


def _tie(res, rtol=1e-12):
    return np.abs(res[0] - res[1]) <= rtol * (1.0 + np.maximum(res[0], res[1]))


def _pick(res, z, previous):
    if not _tie(res):
        return int(np.argmin(res)), False
    if previous is not None:
        return int(np.argmin(np.abs(z - previous))), True
    return int(np.argmax(z.real)), True


def reflection_phase(sigma: np.ndarray, previous: Optional[complex] = None) -> PhaseSolution:
    """Reflection phase from the reflection matrix at one frequency.

    ``e^{2 i phi}`` is a root of ``z - 1/z = 2X`` with
    ``X = (S23* - S13) / (S11 - S21* - S12 + S22*)``. Of the two roots the one
    whose two reflection lines agree best (one the conjugate of the other) wins;
    ties go to the root nearest ``previous`` or, failing that, to ``Re z`` largest.
    """
    sigma = np.asarray(sigma, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        den, z, line1, line2, res = _phase_candidates(sigma)
    if abs(den) < 1e-14:
        raise PhaseUndefinedError("reflection phase undefined: vanishing denominator")
    k, tie = _pick(res, z, previous)
    zk = complex(z[k])
    return PhaseSolution(
        phi=cmath.phase(zk) / 2, exp_plus=zk, exp_minus=1 / zk,
        half_R2=complex(line1[k]), half_R2_conj=complex(line2[k]),
        residual=float(res[k]), rejected_residual=float(res[1 - k]),
        unimodularity=abs(abs(zk) - 1.0), tie=tie,
    )


def reflectivity(vs: VariationSystem, grid: SpectrumGrid) -> tuple[SpectrumGrid, SpectrumGrid]:
    """Reflectivity ``|R^2|`` and transmissivity ``1 - |R^2|`` on a grid.

    Points where the phase is undefined are filled by linear interpolation and
    flagged in ``meta['invalid']``.
    """
    sig = reflection_sigma(vs, grid.w)
    with np.errstate(divide="ignore", invalid="ignore"):
        den, z, line1, line2, res = _phase_candidates(sig)
    invalid = ~np.isfinite(res).all(axis=0) | (np.abs(den) < 1e-14)
    choice = np.argmin(np.where(np.isfinite(res), res, np.inf), axis=0)
    ties = _tie(res) & ~invalid
    previous = None
    for k in range(grid.n_points):
        if invalid[k]:
            continue
        if ties[k]:
            choice[k], _ = _pick(res[:, k], z[:, k], previous)
        previous = z[choice[k], k]
    cols = np.arange(grid.n_points)
    refl = 2.0 * np.abs(line1[choice, cols])
    if invalid.any():
        if invalid.all():
            raise PhaseUndefinedError("reflection phase undefined at every grid point")
        refl[invalid] = np.interp(grid.w[invalid], grid.w[~invalid], refl[~invalid])
    z_sel = z[choice, cols]
    meta = {
        "residual": np.where(invalid, np.nan, res[choice, cols]),
        "unimodularity": np.abs(np.abs(z_sel) - 1.0),
        "invalid": invalid,
        "ties": ties,
    }
    return (grid.with_values(refl, quantity="R", **meta),
            grid.with_values(1.0 - refl, quantity="T", **meta))


# --- fully linearized probe -------------------------------------------------------

def linearized_drift(ss: SteadyState, params: NormalizedParams) -> np.ndarray:
    """2x2 drift for ``(db, db^dagger)`` with the pump population frozen at ``n_bar``."""
    detuning = 2 * params.beta * ss.n_bar + 1
    g = params.gamma1
    a = params.alpha
    return 0.5 * np.array([
        [-1j * detuning - 0.5 * g, -4j * a],
        [4j * a, 1j * detuning - 0.5 * g],
    ], dtype=complex)


def _require_stable_drift(W):
    eig = np.linalg.eigvals(W)
    if not np.all(eig.real < 0):
        raise InstabilityError(f"linearized drift unstable, eigenvalues {eig}")


def linearized_scattering(ss: SteadyState, params: NormalizedParams, w) -> np.ndarray:
    W = linearized_drift(ss, params)
    return I2 - params.gamma1 * _resolvent(W, w)


def multiplicative_amplitude(ss: SteadyState, params: NormalizedParams, w) -> np.ndarray:
    """``(b(w), b*(w)) = gamma (W - iwI)^-1 (b_bar, b_bar*)``; shape ``(2,) + w.shape``."""
    W = linearized_drift(ss, params)
    _require_stable_drift(W)
    b = ss.b_bar
    vec = np.array([b, np.conj(b)])
    amp = params.gamma1 * (_resolvent(W, w) @ vec)
    return np.moveaxis(amp, -1, 0)


def linearized_spectrum(ss: SteadyState, params: NormalizedParams, grid: SpectrumGrid,
                        with_amplitude: bool = False) -> SpectrumGrid:
    """Probe output density of the linearized scheme, ``|S11 + S12|^2 / 2``."""
    W = linearized_drift(ss, params)
    _require_stable_drift(W)
    S = linearized_scattering(ss, params, grid.w)
    values = 0.5 * np.abs(S[:, 0, 0] + S[:, 0, 1]) ** 2
    meta = {"quantity": "S_BB", "scheme": "linearized"}
    if with_amplitude:
        meta["amplitude"] = multiplicative_amplitude(ss, params, grid.w)
    return grid.with_values(values, **meta)


def higher_order_spectrum(ss: SteadyState, params: NormalizedParams, grid: SpectrumGrid,
                          convolution: bool = False) -> tuple[SpectrumGrid, SpectrumGrid]:
    """``(S_DD, S_BB)`` along the higher-order path."""
    vs = build_variation(ss, params)
    amplitude = multiplicative_amplitude(ss, params, grid.w) if convolution else None
    s_dd = sdd(vs, grid, amplitude)
    return s_dd, recover_sbb(s_dd)
