"""Split-step Fourier solver for i u_t = -u_xx + V u on a periodic grid.

Used to check the two-term Dyson sum against an independent time integration.
Note on normalization: with f_hat(p) = int f e^{-ixp} dx the transform of a
product is (1/2pi) V_hat * u_hat, so the physical first-order correction is
s2 / (2 pi) where s2 is the amplitude-W integral evaluated in ``dyson``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bands import BandFunction, fourier_eval, spatial_eval
from .dyson import TWO_PI, AmplitudeW, w_values
from .quad import gauss_legendre

MIN_POINTS = 1 << 10
PADDING = 20.0
CFL_LIMIT = 0.1
INTERIOR_MARGIN = 0.1
# boundary values of u0 and V, relative to their peaks, below which wrap-around is negligible
TAIL_LEVEL = 1e-10
GRID_TOL = 1e-11
_CHUNK = 1 << 22


class CFLWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpectralGrid:
    half_width: float
    n_points: int = 1 << 14
    dt: float = 1e-3

    def __post_init__(self):
        if self.n_points < MIN_POINTS or self.n_points & (self.n_points - 1):
            raise ValueError(f"n_points must be a power of two >= {MIN_POINTS}")
        if not self.half_width > 0 or not self.dt > 0:
            raise ValueError("half_width and dt must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n_points)

    @property
    def p(self) -> np.ndarray:
        return TWO_PI * np.fft.fftfreq(self.n_points, d=self.dx)

    @property
    def nyquist(self) -> float:
        return math.pi / self.dx

    def interior(self) -> np.ndarray:
        return np.abs(self.x) <= (1.0 - INTERIOR_MARGIN) * self.half_width


def _max_frequency(u0: BandFunction, V: BandFunction | None) -> float:
    bands = [u0.band_lo, u0.band_hi]
    if V is not None:
        bands += [u0.band_lo + V.band_lo, u0.band_hi + V.band_hi]
    return max(abs(b) for b in bands)


def grid_for(u0: BandFunction, V: BandFunction | None, t_final: float,
             n_points: int = 1 << 14, dt: float = 1e-3) -> SpectralGrid:
    """Padded grid keeping the packet and the data tails away from the periodic boundary.

    Starts from the travel distance plus PADDING and doubles the half-width
    until u0 and V at the boundary are below TAIL_LEVEL times their peaks.
    """
    reach = abs(u0.center) + 2.0 * _max_frequency(u0, V) * t_final + PADDING
    half_width = reach / (1.0 - INTERIOR_MARGIN)
    fields = [u0] + ([V] if V is not None and not V.is_zero() else [])
    while any(_tail(f, half_width) > TAIL_LEVEL for f in fields):
        half_width *= 2.0
    grid = SpectralGrid(half_width, n_points, dt)
    check_grid(grid, u0, V, t_final)
    return grid


def _tail(f: BandFunction, half_width: float) -> float:
    peak = abs(spatial_eval(f, f.center))
    edge = np.abs(spatial_eval(f, np.array([-half_width, half_width])))
    return float(np.max(edge)) / peak if peak > 0 else 0.0


def check_grid(grid: SpectralGrid, u0: BandFunction, V: BandFunction | None, t_final: float):
    pmax = _max_frequency(u0, V)
    if grid.nyquist < 4.0 * pmax:
        raise ValueError(f"grid Nyquist {grid.nyquist:.3g} below 4 max|p| = {4 * pmax:.3g}")
    if grid.half_width < abs(u0.center) + 2.0 * pmax * t_final + PADDING:
        raise ValueError("grid half-width too small for the packet's travel")


def evolve(u0: BandFunction, V: BandFunction | None, grid: SpectralGrid, t_final: float,
           epsilon: float = 1.0) -> np.ndarray:
    """Strang splitting: half potential step, exact kinetic step, half potential step."""
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    check_grid(grid, u0, V, t_final)
    u = np.asarray(spatial_eval(u0, grid.x, GRID_TOL), dtype=complex)
    steps = int(math.ceil(t_final / grid.dt - 1e-9))
    if steps == 0:
        return u
    dt = t_final / steps
    kinetic = np.exp(-1j * grid.p**2 * dt)
    if V is None or V.is_zero() or epsilon == 0:
        return np.fft.ifft(kinetic**steps * np.fft.fft(u)) if steps else u
    potential = epsilon * np.asarray(spatial_eval(V, grid.x, GRID_TOL), dtype=complex)
    if dt * float(np.max(np.abs(potential))) > CFL_LIMIT:
        warnings.warn(f"dt * max|V| = {dt * np.max(np.abs(potential)):.3g} exceeds {CFL_LIMIT}",
                      CFLWarning, stacklevel=2)
    half = np.exp(-0.5j * dt * potential)
    full = half * half
    u = half * u
    for step in range(steps):
        u = np.fft.ifft(kinetic * np.fft.fft(u))
        u = (full if step < steps - 1 else half) * u
    return u


def _inverse_on_grid(amplitude, lo: float, hi: float, t: float, x: np.ndarray,
                     tol: float = GRID_TOL) -> np.ndarray:
    """(1/2pi) int_lo^hi A(p) e^{-itp^2 + ixp} dp at every x, doubling panels until stable."""
    xg, wg = gauss_legendre(32)
    freq = float(np.max(np.abs(x))) + 2.0 * t * max(abs(lo), abs(hi))
    panels = max(4, int(math.ceil(freq * (hi - lo) / 8.0)))
    previous = None
    while True:
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        nodes = ((edges[:-1] + half)[:, None] + half[:, None] * xg).ravel()
        weights = (half[:, None] * wg).ravel()
        weighted = weights * amplitude(nodes) * np.exp(-1j * t * nodes**2) / TWO_PI
        out = np.empty(x.shape, dtype=complex)
        step = max(1, _CHUNK // nodes.size)
        for start in range(0, x.size, step):
            block = x[start:start + step]
            out[start:start + step] = np.exp(1j * np.outer(block, nodes)) @ weighted
        if previous is not None and np.max(np.abs(out - previous)) < tol:
            return out
        if panels > 1 << 14:
            raise RuntimeError("grid inverse transform did not stabilize")
        previous = out
        panels *= 2


def s1_on_grid(u0: BandFunction, t: float, x: np.ndarray) -> np.ndarray:
    return _inverse_on_grid(lambda p: fourier_eval(u0, p), u0.band_lo, u0.band_hi, t, x)


def s2_on_grid(W: AmplitudeW, t: float, x: np.ndarray) -> np.ndarray:
    lo, hi = W.support
    return _inverse_on_grid(lambda p: w_values(W, t, p, 1e-13), lo, hi, t, x)


@dataclass(frozen=True)
class ResidualRow:
    epsilon: float
    residual: float
    s2_sup: float
    solution_sup: float


@dataclass(frozen=True)
class ResidualTable:
    t: float
    rows: list[ResidualRow]
    slope: float
    free_error: float

    @property
    def slope_ok(self) -> bool:
        return 1.7 <= self.slope <= 2.3


def dyson_residual(u0: BandFunction, V: BandFunction, grid: SpectralGrid, t: float,
                   epsilon_list=(0.0125, 0.025, 0.05, 0.1)) -> ResidualTable:
    """sup over the grid interior of |u_eps - S1 - eps S2/(2pi)| for each eps, plus the eps-slope."""
    interior = grid.interior()
    x = grid.x[interior]
    s1 = s1_on_grid(u0, t, x)
    s2 = s2_on_grid(AmplitudeW(V, u0), t, x) / TWO_PI
    free = evolve(u0, None, grid, t)[interior]
    free_error = float(np.max(np.abs(free - s1)) / np.max(np.abs(s1)))
    rows = []
    for eps in epsilon_list:
        u = evolve(u0, V, grid, t, eps)[interior]
        rows.append(ResidualRow(eps, float(np.max(np.abs(u - s1 - eps * s2))),
                                float(eps * np.max(np.abs(s2))), float(np.max(np.abs(u)))))
    eps = np.log([r.epsilon for r in rows if r.epsilon > 0])
    res = np.log([r.residual for r in rows if r.epsilon > 0])
    slope = float(np.polyfit(eps, res, 1)[0]) if eps.size >= 2 else math.nan
    return ResidualTable(t, rows, slope, free_error)
