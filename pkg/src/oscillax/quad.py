"""Gauss-Legendre panel quadrature shared by every integral in the package.

Each panel is integrated with a 32-node rule and checked against a 16-node
rule on the same panel.  Panels whose two estimates disagree by more than
their share of the tolerance are bisected.  Panel sizes are seeded from the
local oscillation frequency so that a panel never spans more than
``PHASE_PER_PANEL`` radians of phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

MAX_PANELS = 2**20
PHASE_PER_PANEL = 8.0
HIGH_ORDER = 32
LOW_ORDER = 16
# chunk size (nodes) for vectorized evaluation
_CHUNK = 1 << 21
_EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Raised when a quadrature exhausts its refinement budget."""

    def __init__(self, message: str, value: complex = 0j, error: float = np.inf):
        super().__init__(message)
        self.value = value
        self.error = error


@dataclass(frozen=True)
class PhaseIntegralResult:
    value: complex
    abs_error_estimate: float
    panels_used: int
    converged: bool = True


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(lo: np.ndarray, hi: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an ``order``-point rule on each panel [lo_i, hi_i]."""
    x, w = gauss_legendre(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return mid[:, None] + half[:, None] * x, half[:, None] * w


def split_edges(edges: np.ndarray, pieces: np.ndarray) -> np.ndarray:
    """Split panel k of ``edges`` into ``pieces[k]`` equal sub-panels."""
    pieces = np.maximum(np.asarray(pieces, dtype=np.int64), 1)
    if np.all(pieces == 1):
        return edges
    lo = edges[:-1]
    h = np.diff(edges) / pieces
    idx = np.repeat(np.arange(lo.size), pieces)
    k = np.arange(idx.size) - np.repeat(np.cumsum(pieces) - pieces, pieces)
    return np.append(lo[idx] + k * h[idx], edges[-1])


def adaptive_panels(
    f: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    tol: float,
    max_panels: int = MAX_PANELS,
    rounding_scale: float = 1.0,
) -> PhaseIntegralResult:
    """Integrate ``f`` over the consecutive panels given by ``edges``.

    ``f`` receives a 2-D array of nodes and returns values of the same shape.
    The error target for a panel is its length share of ``tol``, floored at the
    rounding level of the panel sum.  ``rounding_scale`` widens that floor when
    the integrand carries a large phase (a phase of size P is only known to
    about P * eps radians).
    """
    edges = np.asarray(edges, dtype=float)
    total = edges[-1] - edges[0]
    if total <= 0.0:
        return PhaseIntegralResult(0j, 0.0, 0)
    lo, hi = edges[:-1], edges[1:]
    values: list[np.ndarray] = []
    errors: list[np.ndarray] = []
    accepted = 0
    converged = True
    while lo.size:
        g32, g16, mass = _panel_sums(f, lo, hi)
        err = np.abs(g32 - g16)
        target = np.maximum(tol * (hi - lo) / total, 64.0 * _EPS * rounding_scale * mass)
        ok = err <= target
        if accepted + int(ok.sum()) + 2 * int((~ok).sum()) > max_panels:
            ok[:] = True
            converged = False
        values.append(g32[ok])
        errors.append(err[ok])
        accepted += int(ok.sum())
        bad = ~ok
        mid = 0.5 * (lo[bad] + hi[bad])
        lo, hi = np.concatenate([lo[bad], mid]), np.concatenate([mid, hi[bad]])
    value = complex(np.sum(np.concatenate(values)))
    error = float(np.sum(np.concatenate(errors)))
    return PhaseIntegralResult(value, error, accepted, converged)


def _panel_sums(f, lo, hi):
    step = max(1, _CHUNK // HIGH_ORDER)
    g32 = np.empty(lo.size, dtype=complex)
    g16 = np.empty(lo.size, dtype=complex)
    mass = np.empty(lo.size)
    for start in range(0, lo.size, step):
        sl = slice(start, start + step)
        x32, w32 = panel_nodes(lo[sl], hi[sl], HIGH_ORDER)
        x16, w16 = panel_nodes(lo[sl], hi[sl], LOW_ORDER)
        f32 = f(x32)
        g32[sl] = np.sum(w32 * f32, axis=1)
        g16[sl] = np.sum(w16 * f(x16), axis=1)
        mass[sl] = np.sum(w32 * np.abs(f32), axis=1)
    return g32, g16, mass


def uniform_edges(lo: float, hi: float, frequency: float, min_panels: int = 1) -> np.ndarray:
    """Equal panels on [lo, hi] with at most PHASE_PER_PANEL radians each."""
    n = max(min_panels, int(np.ceil(abs(frequency) * (hi - lo) / PHASE_PER_PANEL)))
    return np.linspace(lo, hi, n + 1)


def batched_integrate(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float,
    frequency: np.ndarray | float = 0.0,
    min_panels: int = 2,
    max_panels: int = 1 << 16,
    rounding_scale: np.ndarray | float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate many rows at once: row i is f(i, y) over y in [lo_i, hi_i].

    ``f(rows, y)`` receives row indices of shape (R,) and nodes of shape (R, n).
    Every row starts with the same panel count, set by the largest frequency in
    the batch, and rows that miss ``tol`` are redone with twice the panels.
    Returns (values, error estimates).  Raises QuadratureError if a row cannot
    meet the tolerance within ``max_panels`` panels.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    freq = np.broadcast_to(np.asarray(frequency, dtype=float), lo.shape)
    scale = np.broadcast_to(np.asarray(rounding_scale, dtype=float), lo.shape)
    values = np.zeros(lo.size, dtype=complex)
    errors = np.zeros(lo.size)
    live = np.flatnonzero(hi > lo)
    if live.size == 0:
        return values, errors
    length = hi[live] - lo[live]
    panels = int(max(min_panels, np.ceil(np.max(freq[live] * length) / PHASE_PER_PANEL)))
    while live.size:
        if panels > max_panels:
            raise QuadratureError(
                f"batched quadrature did not reach tol={tol:g} with {max_panels} panels",
                values[live[0]], float(errors[live[0]]))
        g32, g16, mass = _row_sums(f, live, lo[live], hi[live], panels)
        err = np.abs(g32 - g16)
        values[live] = g32
        errors[live] = err
        ok = err <= np.maximum(tol, 64.0 * _EPS * scale[live] * mass)
        live = live[~ok]
        panels *= 2
    return values, errors


def _row_sums(f, rows, lo, hi, panels):
    t = np.linspace(0.0, 1.0, panels + 1)
    x32, w32 = gauss_legendre(HIGH_ORDER)
    x16, w16 = gauss_legendre(LOW_ORDER)
    # reference nodes for one row on [0, 1]
    a, b = t[:-1], t[1:]
    ref32 = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x32).ravel()
    ref16 = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x16).ravel()
    rw32 = (0.5 * (b - a)[:, None] * w32).ravel()
    rw16 = (0.5 * (b - a)[:, None] * w16).ravel()
    g32 = np.empty(rows.size, dtype=complex)
    g16 = np.empty(rows.size, dtype=complex)
    mass = np.empty(rows.size)
    step = max(1, _CHUNK // ref32.size)
    for start in range(0, rows.size, step):
        sl = slice(start, start + step)
        length = (hi[sl] - lo[sl])[:, None]
        y32 = lo[sl][:, None] + length * ref32
        y16 = lo[sl][:, None] + length * ref16
        f32 = f(rows[sl], y32)
        g32[sl] = length[:, 0] * (f32 @ rw32)
        g16[sl] = length[:, 0] * (f(rows[sl], y16) @ rw16)
        mass[sl] = length[:, 0] * (np.abs(f32) @ rw32)
    return g32, g16, mass
