"""Direct evaluation of int_{lo}^{hi} U(p) exp(-i omega (p - p0)^2) dp.

This is the ground truth every expansion is measured against.  Panels are laid
out so that each spans at most PHASE_PER_PANEL radians of the quadratic phase
(at least ten nodes per local wavelength with the 32-point rule) and are then
refined adaptively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quad import (MAX_PANELS, PHASE_PER_PANEL, PhaseIntegralResult, QuadratureError,
                   adaptive_panels, split_edges, uniform_edges)

MAX_OMEGA = 1e6


@dataclass(frozen=True)
class OscillatoryIntegral:
    """amplitude must accept numpy arrays and vanish outside [support_lo, support_hi].

    ``amplitude_frequency`` is an optional bound on how fast the amplitude itself
    oscillates (radians per unit p); it only affects the initial panel layout.
    """

    amplitude: Callable[[np.ndarray], np.ndarray]
    support_lo: float
    support_hi: float
    omega: float
    p0: float
    amplitude_frequency: float = 0.0

    def __post_init__(self):
        if not self.support_lo < self.support_hi:
            raise ValueError("empty support interval")
        if not self.omega > 0:
            raise ValueError("omega must be positive")


def phase_edges(lo: float, hi: float, omega: float, p0: float,
                extra_frequency: float = 0.0, min_panels: int = 4) -> np.ndarray:
    """Panel edges on [lo, hi] keeping the phase omega (p - p0)^2 per panel bounded."""
    cuts = [lo, hi]
    if lo < p0 < hi:
        cuts = [lo, p0, hi]
    pieces = []
    for left, right in zip(cuts[:-1], cuts[1:]):
        d_left, d_right = abs(left - p0), abs(right - p0)
        d_near, d_far = min(d_left, d_right), max(d_left, d_right)
        # distances from p0 at which the phase has advanced by PHASE_PER_PANEL
        count = int(math.ceil(omega * (d_far**2 - d_near**2) / PHASE_PER_PANEL))
        d = np.sqrt(np.linspace(d_near**2, d_far**2, max(count, 1) + 1))
        d[0], d[-1] = d_near, d_far
        side = p0 + d if left >= p0 else p0 - d[::-1]
        side[0], side[-1] = left, right
        pieces.append(side)
    edges = np.unique(np.concatenate(pieces))
    lengths = np.diff(edges)
    split = np.ceil(lengths / ((hi - lo) / min_panels))
    if extra_frequency > 0:
        split = np.maximum(split, np.ceil(lengths * extra_frequency / PHASE_PER_PANEL))
    return split_edges(edges, split)


def integrate(oi: OscillatoryIntegral, tol: float = 1e-9,
              max_panels: int = MAX_PANELS, strict: bool = True) -> PhaseIntegralResult:
    """Adaptive Gauss-Legendre evaluation of the quadratic-phase integral.

    With ``strict`` a budget overrun raises QuadratureError carrying the best
    value; otherwise the result comes back with ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if oi.omega > MAX_OMEGA:
        raise ValueError(f"omega={oi.omega:g} exceeds {MAX_OMEGA:g}; refusing to lose accuracy")
    omega, p0 = oi.omega, oi.p0
    amplitude = oi.amplitude

    def integrand(p):
        d = p - p0
        return amplitude(p) * np.exp(-1j * omega * d * d)

    edges = phase_edges(oi.support_lo, oi.support_hi, omega, p0, oi.amplitude_frequency)
    if edges.size - 1 > max_panels:
        raise QuadratureError(f"initial layout needs {edges.size - 1} panels")
    reach = max(abs(oi.support_lo - p0), abs(oi.support_hi - p0))
    result = adaptive_panels(integrand, edges, tol, max_panels,
                             rounding_scale=1.0 + omega * reach * reach)
    if strict and not result.converged:
        raise QuadratureError(
            f"oscillatory integral over [{oi.support_lo}, {oi.support_hi}] with omega={omega:g}"
            f" did not converge", result.value, result.abs_error_estimate)
    return result


def integrate_time_kernel(f: Callable[[np.ndarray], np.ndarray], t_lo: float, t_hi: float,
                          tol: float = 1e-9, frequency: float = 0.0,
                          max_panels: int = MAX_PANELS, strict: bool = True) -> PhaseIntegralResult:
    """Adaptive quadrature of a complex integrand on [t_lo, t_hi].

    ``frequency`` (radians per unit t) seeds the panel layout when the integrand
    is known to oscillate.
    """
    if t_lo > t_hi:
        raise ValueError("t_lo must not exceed t_hi")
    if t_lo == t_hi:
        return PhaseIntegralResult(0j, 0.0, 0)
    edges = uniform_edges(t_lo, t_hi, frequency, min_panels=2)
    scale = 1.0 + abs(frequency) * max(abs(t_lo), abs(t_hi))
    result = adaptive_panels(f, edges, tol, max_panels, rounding_scale=scale)
    if strict and not result.converged:
        raise QuadratureError(f"time integral on [{t_lo}, {t_hi}] did not converge",
                              result.value, result.abs_error_estimate)
    return result
