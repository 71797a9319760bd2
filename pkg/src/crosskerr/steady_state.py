"""Mean-field steady state of the pump/probe system.

For a given intracavity pump population ``n_bar`` the probe moments follow in
closed form::

    m_bar = 2 alpha^2 / ((1 + beta n_bar)^2 + gamma^2 - 4 alpha^2)
    d_bar = -i alpha (m_bar + 1/2) / (i (1 + beta n_bar) + gamma)

and ``n_bar`` itself is the root of ``lam^2 n_bar (m_bar / 2|d_bar|)^2 = xi^2``.
"""

from __future__ import annotations

import cmath
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (AboveThresholdError, DivergenceError, InvalidParameterError,
                     NoSolutionError, UndefinedMeasureError)
from .params import NormalizedParams

log = logging.getLogger(__name__)

#: Minimum distance of the threshold denominator from zero.
THRESHOLD_MARGIN = 1e-6
DEFAULT_N_MAX = 1e8


@dataclass(frozen=True)
class SteadyState:
    n_bar: float
    m_bar: float
    d_bar: complex
    residual: float = 0.0
    iterations: int = 0
    n_roots: int = 1

    @property
    def b_bar(self) -> complex:
        """Principal square root of ``2 d_bar``."""
        return cmath.sqrt(2 * self.d_bar)

    @property
    def multiple_roots(self) -> bool:
        return self.n_roots > 1

    def as_dict(self) -> dict:
        return {
            "n_bar": self.n_bar,
            "m_bar": self.m_bar,
            "d_bar_abs": abs(self.d_bar),
            "d_bar_arg": cmath.phase(self.d_bar),
            "b_bar_re": self.b_bar.real,
            "b_bar_im": self.b_bar.imag,
            "measure": nonlinearity_measure(self) if self.d_bar != 0 else None,
            "residual": self.residual,
            "iterations": self.iterations,
            "n_roots": self.n_roots,
        }


def threshold_gap(n_bar: float, params: NormalizedParams) -> float:
    """``(1 + beta n)^2 + gamma^2 - 4 alpha^2``; positive below threshold."""
    detuning = 1.0 + params.beta * n_bar
    return detuning ** 2 + params.gamma1 ** 2 - 4.0 * params.alpha ** 2


def mean_probe(n_bar: float, params: NormalizedParams) -> tuple[float, complex]:
    if n_bar < 0:
        raise InvalidParameterError(f"n_bar must be >= 0, got {n_bar!r}")
    gap = threshold_gap(n_bar, params)
    if gap <= THRESHOLD_MARGIN:
        raise AboveThresholdError(
            f"no steady state: threshold gap {gap:.3e} <= {THRESHOLD_MARGIN:g} at n_bar={n_bar:g}")
    alpha = params.alpha
    detuning = 1.0 + params.beta * n_bar
    m_bar = 2.0 * alpha ** 2 / gap
    d_bar = -1j * alpha * (m_bar + 0.5) / (1j * detuning + params.gamma1)
    return m_bar, complex(d_bar)


def steady_state_at(n_bar: float, params: NormalizedParams) -> SteadyState:
    """Probe moments at a prescribed pump population (no pump balance imposed)."""
    m_bar, d_bar = mean_probe(n_bar, params)
    return SteadyState(n_bar=float(n_bar), m_bar=m_bar, d_bar=d_bar)


def nonlinearity_measure(ss: SteadyState) -> float:
    """``m_bar / (2 |d_bar|)``."""
    if ss.d_bar == 0:
        raise UndefinedMeasureError("nonlinearity measure undefined for d_bar = 0")
    return ss.m_bar / (2.0 * abs(ss.d_bar))


def pump_residual(n_bar: float, params: NormalizedParams) -> float:
    """``lam^2 n (m/2|d|)^2 - xi^2``; zero at the pump balance."""
    m_bar, d_bar = mean_probe(n_bar, params)
    if d_bar == 0:
        # alpha = 0: the measure vanishes identically
        return -params.xi ** 2
    ratio = m_bar / (2.0 * abs(d_bar))
    return params.lam ** 2 * n_bar * ratio ** 2 - params.xi ** 2


def _scan_points(n_max: float, n_scan: int) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(1e-9, n_max, n_scan)])


def solve_pump(params: NormalizedParams, *, n_max: float = DEFAULT_N_MAX,
               n_scan: int = 4000, rtol: float = 1e-15) -> SteadyState:
    """Pump population from the implicit balance equation.

    The residual is scanned on a geometric grid over ``[0, n_max]`` to bracket
    every sign change; the smallest bracket is refined with Brent's method.
    ``n_roots`` on the result counts the sign changes found.
    """
    if params.xi == 0:
        ss = steady_state_at(0.0, params)
        return ss
    grid = _scan_points(n_max, n_scan)
    values = np.empty_like(grid)
    valid = np.ones(grid.size, dtype=bool)
    for k, n in enumerate(grid):
        try:
            values[k] = pump_residual(n, params)
        except AboveThresholdError:
            valid[k] = False
            values[k] = np.nan
    brackets = [k for k in range(grid.size - 1)
                if valid[k] and valid[k + 1] and np.sign(values[k]) != np.sign(values[k + 1])]
    if not brackets:
        raise NoSolutionError(
            f"no below-threshold root of the pump balance for xi={params.xi:.6g} on [0, {n_max:g}]")
    k = brackets[0]
    lo, hi = grid[k], grid[k + 1]
    n_bar, info = brentq(pump_residual, lo, hi, args=(params,), xtol=1e-300,
                         rtol=max(rtol, 4 * np.finfo(float).eps), full_output=True)
    m_bar, d_bar = mean_probe(n_bar, params)
    if len(brackets) > 1:
        log.debug("pump balance has %d roots below n_max=%g; returning the smallest",
                  len(brackets), n_max)
    return SteadyState(
        n_bar=float(n_bar), m_bar=m_bar, d_bar=d_bar,
        residual=abs(pump_residual(n_bar, params)),
        iterations=int(info.iterations), n_roots=len(brackets),
    )


def ladder_recovery(d: complex, max_iter: int = 10_000, tol: float = 1e-12) -> complex:
    """Scalar fixed-point iteration ``b <- d + b - b^2/2`` from ``b = 1``.

    Converges to the root of ``b^2 = 2d`` on the branch near 1 (for ``d = 0``
    the approach to 0 is only algebraic, ~2/j).
    """
    if max_iter < 1 or tol <= 0:
        raise InvalidParameterError("max_iter must be >= 1 and tol > 0")
    b = complex(1.0)
    for _ in range(max_iter):
        if abs(0.5 * b * b - d) < tol:
            return b
        b = d + b - 0.5 * b * b
        if not cmath.isfinite(b):
            break
    if abs(0.5 * b * b - d) < tol:
        return b
    raise DivergenceError(
        f"ladder recovery did not converge for d={d!r} within {max_iter} steps", last_iterate=b)
