"""Physical and normalized parameter sets.

All rates inside :class:`SystemParams` are angular (rad/s). Conversion from
the Hz / quality-factor form used in config files happens once, in
:func:`system_params_from_mapping`.

Normalization divides every rate by the probe frequency::

    alpha = f / Omega            beta  = g / Omega
    lam   = kappa / (2 Omega)    gamma_l = (Gamma + (l - 1) kappa) / (2 Omega)
    xi    = sqrt(kappa eta P_op / (hbar omega)) / (2 Omega)

with normalized frequency w = omega / (2 Omega) and time tau = 2 Omega t.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import InvalidParameterError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

HBAR = 1.054571817e-34  # J s, CODATA 2018
TWO_PI = 2.0 * math.pi
DEFAULT_L = 3


@dataclass(frozen=True)
class SystemParams:
    """Rates in rad/s, power in W."""

    omega: float
    Omega: float
    g: float
    f: float
    kappa: float
    Gamma_loss: float
    eta: float
    P_op: float
    hbar: float = field(default=HBAR, init=False)

    def __post_init__(self):
        for name in ("omega", "Omega", "g", "f", "kappa", "Gamma_loss"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise InvalidParameterError(f"{name} must be a positive finite rate, got {value!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidParameterError(f"eta must lie in [0, 1], got {self.eta!r}")
        if not math.isfinite(self.P_op) or self.P_op < 0.0:
            raise InvalidParameterError(f"P_op must be >= 0, got {self.P_op!r}")

    @classmethod
    def from_quality_factors(cls, *, omega, Omega, g, f, Q_pump, Q_probe, eta, P_op):
        """Loss rates from quality factors: kappa = omega/Q_pump, Gamma = Omega/Q_probe."""
        if Q_pump <= 0 or Q_probe <= 0:
            raise InvalidParameterError("quality factors must be positive")
        return cls(omega=omega, Omega=Omega, g=g, f=f, kappa=omega / Q_pump,
                   Gamma_loss=Omega / Q_probe, eta=eta, P_op=P_op)

    def with_power(self, P_op: float) -> "SystemParams":
        return SystemParams(self.omega, self.Omega, self.g, self.f, self.kappa,
                            self.Gamma_loss, self.eta, P_op)


@dataclass(frozen=True)
class NormalizedParams:
    alpha: float
    beta: float
    lam: float
    gamma: np.ndarray
    xi: float
    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise InvalidParameterError(f"truncation order L must be a positive integer, got {self.L!r}")
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.shape != (self.L,):
            raise InvalidParameterError(f"gamma must have length L={self.L}, got shape {gamma.shape}")
        if self.xi < 0:
            raise InvalidParameterError(f"xi must be >= 0, got {self.xi!r}")
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)

    @property
    def gamma1(self) -> float:
        return float(self.gamma[0])

    @classmethod
    def from_values(cls, alpha, beta, lam, gamma1, xi=0.0, L=DEFAULT_L):
        """Build the decay ladder gamma_l = gamma1 + (l - 1) lam directly in normalized units."""
        gamma = gamma1 + lam * np.arange(L)
        return cls(float(alpha), float(beta), float(lam), gamma, float(xi), int(L))

    def replace(self, **changes) -> "NormalizedParams":
        values = dict(alpha=self.alpha, beta=self.beta, lam=self.lam, gamma1=self.gamma1,
                      xi=self.xi, L=self.L)
        values.update(changes)
        return NormalizedParams.from_values(**values)


def input_rate(p: SystemParams) -> float:
    """Normalized photon input rate xi."""
    return math.sqrt(p.kappa * p.eta * p.P_op / (p.hbar * p.omega)) / (2.0 * p.Omega)


def normalize(p: SystemParams, L: int = DEFAULT_L) -> NormalizedParams:
    if int(L) != L or L < 1:
        raise InvalidParameterError(f"truncation order L must be >= 1, got {L!r}")
    two_Omega = 2.0 * p.Omega
    levels = np.arange(L)
    gamma = (p.Gamma_loss + levels * p.kappa) / two_Omega
    return NormalizedParams(
        alpha=p.f / p.Omega,
        beta=p.g / p.Omega,
        lam=p.kappa / two_Omega,
        gamma=gamma,
        xi=input_rate(p),
        L=int(L),
    )


# --- config ingestion -------------------------------------------------------

#: Parameters of the worked example: omega = 2 Omega = 2 pi x 2 GHz, Q = 100 on
#: both modes, g = 2 pi x 100 kHz, f = 2 pi x 50 MHz, eta = 0.4, P_op = 1 fW.
EXAMPLE_CONFIG: dict[str, Any] = {
    "pump_frequency_hz": 2.0e9,
    "probe_frequency_hz": 1.0e9,
    "cross_kerr_hz": 1.0e5,
    "parametric_hz": 5.0e7,
    "pump_q": 100.0,
    "probe_q": 100.0,
    "coupling_efficiency": 0.4,
    "power_w": 1.0e-15,
}

CONFIG_KEYS = {
    "pump_frequency_hz": "pump mode frequency omega/2pi [Hz]",
    "probe_frequency_hz": "probe mode frequency Omega/2pi [Hz]",
    "cross_kerr_hz": "cross-Kerr rate g/2pi [Hz]",
    "parametric_hz": "parametric amplification rate f/2pi [Hz]",
    "pump_loss_hz": "pump loss rate kappa/2pi [Hz] (or give pump_q)",
    "probe_loss_hz": "probe loss rate Gamma/2pi [Hz] (or give probe_q)",
    "pump_q": "pump quality factor, kappa = omega/Q",
    "probe_q": "probe quality factor, Gamma = Omega/Q",
    "coupling_efficiency": "eta in [0, 1]",
    "power_w": "input optical power P_op [W]",
}


def example_params() -> SystemParams:
    return system_params_from_mapping(EXAMPLE_CONFIG)


def _loss(mapping, rate_key, q_key, frequency):
    if rate_key in mapping and q_key in mapping:
        raise InvalidParameterError(f"give either {rate_key} or {q_key}, not both")
    if rate_key in mapping:
        return TWO_PI * float(mapping[rate_key])
    if q_key in mapping:
        q = float(mapping[q_key])
        if q <= 0:
            raise InvalidParameterError(f"{q_key} must be positive")
        return frequency / q
    raise InvalidParameterError(f"missing {rate_key} or {q_key}")


def system_params_from_mapping(mapping: Mapping[str, Any]) -> SystemParams:
    """Convert a Hz/Q key-value mapping (see :data:`CONFIG_KEYS`) into angular rates."""
    unknown = set(mapping) - set(CONFIG_KEYS)
    if unknown:
        raise InvalidParameterError(f"unknown parameter keys: {sorted(unknown)}")
    try:
        omega = TWO_PI * float(mapping["pump_frequency_hz"])
        Omega = TWO_PI * float(mapping["probe_frequency_hz"])
        g = TWO_PI * float(mapping["cross_kerr_hz"])
        f = TWO_PI * float(mapping["parametric_hz"])
        eta = float(mapping["coupling_efficiency"])
        P_op = float(mapping["power_w"])
    except KeyError as exc:
        raise InvalidParameterError(f"missing parameter key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"non-numeric parameter value: {exc}") from None
    kappa = _loss(mapping, "pump_loss_hz", "pump_q", omega)
    Gamma = _loss(mapping, "probe_loss_hz", "probe_q", Omega)
    return SystemParams(omega=omega, Omega=Omega, g=g, f=f, kappa=kappa,
                        Gamma_loss=Gamma, eta=eta, P_op=P_op)


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a TOML config file. Physical parameters live in the ``[params]`` table."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise InvalidParameterError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InvalidParameterError(f"cannot parse {path}: {exc}") from None
