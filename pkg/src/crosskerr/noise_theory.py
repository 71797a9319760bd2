"""Spectra of integer powers of Gaussian noise.

The input field is regularized with the Gaussian correlation::

    <a^dagger(tau) a(t)> = (zeta/2) exp(-pi zeta^2 (t - tau)^2)

which tends to ``delta(t - tau)/2`` as ``zeta -> inf``. For the normalized
power ``alpha_j = kappa^((1-j)/2) a^j`` the Wick pairings give::

    <alpha_j^dagger(tau) alpha_j(t)> = j zeta^j / (2^j kappa^(j-1)) exp(-pi j zeta^2 dt^2)

Fourier transforms here are unnormalized, ``int e^{iwt} (.) dt``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidParameterError, StatisticsError

MIN_DC_SAMPLES = 100_000
DC_BAND = 0.01
DC_RATIO_THRESHOLD = 5.0


@dataclass(frozen=True)
class GaussianNoiseModel:
    zeta: float
    kappa: float
    j: int = 1

    def __post_init__(self):
        if not (self.zeta > 0 and self.kappa > 0):
            raise InvalidParameterError("zeta and kappa must be positive")
        if int(self.j) != self.j or self.j < 1:
            raise InvalidParameterError(f"j must be a positive integer, got {self.j!r}")


def higher_power_psd(m: GaussianNoiseModel, w):
    """Spectral density of ``alpha_j``; equals ``sqrt(j)/2^j`` at w = 0 when zeta = kappa."""
    j = m.j
    pref = math.sqrt(j) * (m.zeta / m.kappa) ** (j - 1) / 2.0 ** j
    return pref * np.exp(-np.square(w) / (4 * math.pi * j * m.zeta ** 2))


def power_noise_field_psd(m: GaussianNoiseModel, w):
    """Spectrum of the field whose j-th power carries the correlation of ``alpha_j``."""
    j = m.j
    pref = math.sqrt(j) / j ** (1.0 / j) * (m.kappa / m.zeta) ** ((j - 1) / j)
    return pref * np.exp(-j * np.square(w) / (4 * math.pi * m.zeta ** 2))


def input_autocorr(zeta: float, t_minus_tau):
    """Regularized input correlation ``(zeta/2) exp(-pi zeta^2 dt^2)``."""
    return 0.5 * zeta * np.exp(-math.pi * zeta ** 2 * np.square(t_minus_tau))


def power_autocorr(m: GaussianNoiseModel, t_minus_tau):
    """Correlation of ``alpha_j`` at lag ``t - tau``."""
    j = m.j
    return (j * m.zeta ** j / (2.0 ** j * m.kappa ** (j - 1))
            * np.exp(-math.pi * j * m.zeta ** 2 * np.square(t_minus_tau)))


def squared_noise_autocorr(zeta: float, kappa: float, t_minus_tau):
    """Correlation of ``a^2 / sqrt(kappa)``: ``(2 zeta^2 / 4 kappa) exp(-2 pi zeta^2 dt^2)``."""
    return power_autocorr(GaussianNoiseModel(zeta, kappa, 2), t_minus_tau)


def wick_pairing_autocorr(zeta: float, kappa: float, j: int, t_minus_tau):
    """``j! <a^dagger a>^j / kappa^(j-1)``, the complex-Gaussian pairing count."""
    return math.factorial(j) * input_autocorr(zeta, t_minus_tau) ** j / kappa ** (j - 1)


# --- Monte-Carlo ---------------------------------------------------------------

def gaussian_kernel(zeta: float, dt: float, width: float = 6.0) -> np.ndarray:
    """Samples of ``h(t) = zeta exp(-2 pi zeta^2 t^2)``; ``h * h`` gives the input correlation."""
    sigma = 1.0 / (2.0 * zeta * math.sqrt(math.pi))
    half = int(math.ceil(width * sigma / dt))
    t = dt * np.arange(-half, half + 1)
    return zeta * np.exp(-2 * math.pi * zeta ** 2 * t ** 2)


def correlated_noise(zeta: float, n_samples: int, dt: float, seed) -> np.ndarray:
    """Complex circular Gaussian samples with the regularized input correlation."""
    if n_samples < 2:
        raise StatisticsError("need at least two samples")
    h = gaussian_kernel(zeta, dt)
    rng = np.random.default_rng(seed)
    m = n_samples + h.size - 1
    dW = rng.normal(0, math.sqrt(dt / 2), m) + 1j * rng.normal(0, math.sqrt(dt / 2), m)
    return fftconvolve(dW, h, mode="valid")


def empirical_autocorr(x: np.ndarray, max_lag: int) -> np.ndarray:
    """``mean_k conj(x_k) x_{k+l}`` for ``l = 0..max_lag`` (FFT based, unbiased)."""
    n = x.size
    if max_lag >= n:
        raise StatisticsError("max_lag must be shorter than the series")
    size = 1 << int(math.ceil(math.log2(2 * n)))
    X = np.fft.fft(x, size)
    acf = np.fft.ifft(np.conj(X) * X)[:max_lag + 1]
    return acf / (n - np.arange(max_lag + 1))


@dataclass
class AutocorrEstimate:
    lags: np.ndarray
    estimate: np.ndarray
    theory: np.ndarray

    @property
    def max_relative_error(self) -> float:
        return float(np.max(np.abs(self.estimate.real - self.theory) / self.theory[0]))


def mc_squared_noise_autocorr(zeta: float, kappa: float, n_samples: int = 1_000_000,
                              dt: float | None = None, max_lag: int | None = None,
                              seed: int = 0) -> AutocorrEstimate:
    """Sample ``a``, square it, and compare its autocorrelation with :func:`squared_noise_autocorr`."""
    dt = 0.02 / zeta if dt is None else dt
    if max_lag is None:
        max_lag = int(math.ceil(0.4 / (zeta * dt)))
    a = correlated_noise(zeta, n_samples, dt, seed)
    c = a * a / math.sqrt(kappa)
    lags = dt * np.arange(max_lag + 1)
    return AutocorrEstimate(lags, empirical_autocorr(c, max_lag),
                            squared_noise_autocorr(zeta, kappa, lags))


@dataclass(frozen=True)
class DCReport:
    j: int
    n_samples: int
    seed: int
    band_fraction: float
    dc_fraction: float
    baseline_fraction: float
    ratio: float
    threshold: float = DC_RATIO_THRESHOLD

    @property
    def concentrated(self) -> bool:
        return self.ratio > self.threshold

    def as_dict(self) -> dict:
        return {**asdict(self), "concentrated": self.concentrated}


def _low_band_fraction(x: np.ndarray, band: float) -> float:
    power = np.abs(np.fft.rfft(x)) ** 2
    k = max(1, int(round(band * power.size)))
    return float(power[:k].sum() / power.sum())


def mc_higher_power_dc_concentration(j: int, n_samples: int = 1_000_000, seed: int = 0,
                                     band: float = DC_BAND) -> DCReport:
    """Fraction of periodogram power of ``x^j`` in the lowest ``band`` of frequencies.

    ``x`` is real white Gaussian noise; the baseline is the same statistic for
    ``x`` itself (about ``band`` for a flat spectrum). Baseline and power share
    the sample so the ratio is not diluted by independent fluctuations.
    """
    if int(j) != j or j < 1:
        raise InvalidParameterError(f"j must be a positive integer, got {j!r}")
    if n_samples < MIN_DC_SAMPLES:
        raise StatisticsError(f"n_samples must be >= {MIN_DC_SAMPLES}, got {n_samples}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = rng.standard_normal(n_samples)
    baseline = _low_band_fraction(x, band)
    frac = _low_band_fraction(x ** j, band)
    return DCReport(j=int(j), n_samples=int(n_samples), seed=int(seed), band_fraction=band,
                    dc_fraction=frac, baseline_fraction=baseline, ratio=frac / baseline)


def noise_quanta_bound(j_max: int = 12) -> list[tuple[int, float]]:
    """``(j, sqrt(j)/2^j)`` for ``j = 1..j_max``."""
    return [(j, math.sqrt(j) / 2.0 ** j) for j in range(1, j_max + 1)]
