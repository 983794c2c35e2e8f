"""Band-limited functions on the real line.

A band function is described on the Fourier side by a profile phi supported
in [-1, 1], stretched onto the band [lo, hi] and modulated so that the
function is centered at ``center`` in space:

    f_hat(p) = phi((2p - (lo + hi)) / (hi - lo)) * exp(-i * center * p)

Fourier convention: f_hat(p) = int f(x) exp(-i x p) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quad import QuadratureError, gauss_legendre

NORM_GRID = 4096
NO_LIMIT = 10**6
TAIL_PANEL = 4.0
TRANSFORM_ORDER = 32


def _out(values: np.ndarray, scalar: bool):
    return complex(values) if scalar else values


class BandProfile:
    """Compactly supported profile on [-1, 1].  Subclasses implement ``deriv``."""

    smoothness_order: int = 0

    def eval(self, s):
        return self.deriv(0, s)

    def deriv(self, order: int, s):
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroProfile(BandProfile):
    smoothness_order: int = NO_LIMIT

    def deriv(self, order: int, s):
        s = np.asarray(s, dtype=float)
        return _out(np.zeros(s.shape, dtype=complex), s.ndim == 0)


@lru_cache(maxsize=None)
def _cos_power_coefficients(m: int) -> tuple[float, ...]:
    # cos^{2m}(x) = 4^{-m} [C(2m,m) + 2 sum_k C(2m,m-k) cos(2kx)]
    scale = 4.0**-m
    coeffs = [scale * math.comb(2 * m, m)]
    coeffs += [2.0 * scale * math.comb(2 * m, m - k) for k in range(1, m + 1)]
    return tuple(coeffs)


@dataclass(frozen=True)
class CosBump(BandProfile):
    """phi(s) = scale * e^{i phase} * (s - root)^power * cos^{2m}(pi s / 2) on [-1, 1].

    C^{2m-1} across s = +-1.  The polynomial factor lets a potential carry an
    explicit zero, e.g. ``root`` placed where the band map sends y = 0.
    """

    m: int = 3
    power: int = 0
    root: float = 0.0
    scale: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("cos_bump needs m >= 1")
        if self.power < 0:
            raise ValueError("cos_bump power must be non-negative")

    @property
    def smoothness_order(self) -> int:
        return 2 * self.m - 1

    @property
    def coefficient(self) -> complex:
        return self.scale * complex(math.cos(self.phase), math.sin(self.phase))

    def _bump_deriv(self, order: int, s: np.ndarray) -> np.ndarray:
        if order == 0:
            # the cosine series cancels near s = +-1; the direct power keeps relative accuracy
            return np.cos(0.5 * math.pi * s) ** (2 * self.m)
        out = np.zeros(s.shape)
        for k, c in enumerate(_cos_power_coefficients(self.m)):
            if k == 0:
                if order == 0:
                    out += c
                continue
            w = k * math.pi
            out += c * w**order * np.cos(w * s + order * math.pi / 2)
        return out

    def deriv(self, order: int, s):
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) < 1.0
        si = s[inside]
        acc = np.zeros(si.shape)
        shifted = si - self.root
        for j in range(min(order, self.power) + 1):
            poly = math.perm(self.power, j) * shifted ** (self.power - j)
            acc += math.comb(order, j) * poly * self._bump_deriv(order - j, si)
        out = np.zeros(s.shape, dtype=complex)
        out[inside] = self.coefficient * acc
        return _out(out, s.ndim == 0)


@dataclass(frozen=True)
class BandFunction:
    profile: BandProfile
    band_lo: float
    band_hi: float
    center: float = 0.0

    def __post_init__(self):
        if not self.band_lo < self.band_hi:
            raise ValueError(f"empty band [{self.band_lo}, {self.band_hi}]")

    @property
    def width(self) -> float:
        return self.band_hi - self.band_lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.band_lo + self.band_hi)

    @property
    def smoothness_order(self) -> int:
        return self.profile.smoothness_order

    def to_profile_coordinate(self, p):
        return (2.0 * np.asarray(p, dtype=float) - (self.band_lo + self.band_hi)) / self.width

    def is_zero(self) -> bool:
        return isinstance(self.profile, ZeroProfile)


def fourier_eval(f: BandFunction, p):
    """f_hat(p); exactly zero outside [band_lo, band_hi]."""
    return fourier_deriv(f, 0, p, _checked=True)


def fourier_deriv(f: BandFunction, order: int, p, _checked: bool = False):
    """order-th derivative of f_hat by Leibniz' rule on profile and modulation."""
    if not _checked and order > f.smoothness_order:
        raise ValueError(
            f"derivative of order {order} exceeds profile smoothness {f.smoothness_order}")
    p = np.asarray(p, dtype=float)
    s = f.to_profile_coordinate(p)
    stretch = 2.0 / f.width
    x0 = f.center
    acc = np.zeros(p.shape, dtype=complex)
    for j in range(order + 1):
        modulation = (-1j * x0) ** (order - j)
        if modulation == 0:
            continue
        acc += math.comb(order, j) * stretch**j * modulation * f.profile.deriv(j, s)
    if x0 != 0.0:
        acc *= np.exp(-1j * x0 * p)
    return _out(acc, p.ndim == 0)


def sup_norm(f: BandFunction, order: int = 0, n: int = NORM_GRID) -> float:
    """max |f_hat^(order)| sampled on n uniform points of the band."""
    if f.is_zero():
        return 0.0
    grid = np.linspace(f.band_lo, f.band_hi, n)
    return float(np.max(np.abs(fourier_deriv(f, order, grid))))


def w_norm(f: BandFunction, k: int, n: int = NORM_GRID) -> float:
    """W^{k,inf} norm taken as the largest sup-norm among derivatives 0..k."""
    return max(sup_norm(f, j, n) for j in range(k + 1))


def profile_transform(profile: BandProfile, y, tol: float = 1e-10, max_nodes: int = 1 << 15):
    """phi_hat(y) = int_{-1}^{1} phi(s) e^{-isy} ds by Gauss-Legendre, doubling until stable."""
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    if isinstance(profile, ZeroProfile):
        zeros = np.zeros(y.shape, dtype=complex)
        return _out(zeros[0] if scalar else zeros, scalar)
    ymax = float(np.max(np.abs(y))) if y.size else 0.0
    n = 128
    while n < 0.75 * ymax + 32:
        n *= 2
    previous = _transform_at(profile, y, n)
    while True:
        n *= 2
        current = _transform_at(profile, y, n)
        diff = float(np.max(np.abs(current - previous))) if y.size else 0.0
        if diff < tol:
            return _out(current[0] if scalar else current, scalar)
        if n >= max_nodes:
            raise QuadratureError(f"profile transform not converged (diff {diff:.3g})",
                                  complex(current.ravel()[0]), diff)
        previous = current


def _transform_at(profile: BandProfile, y: np.ndarray, n: int) -> np.ndarray:
    # n nodes as n/32 panels of the 32-point rule; high-order single rules are costly to build
    xg, wg = gauss_legendre(TRANSFORM_ORDER)
    panels = max(1, n // TRANSFORM_ORDER)
    edges = np.linspace(-1.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    s = ((edges[:-1] + half)[:, None] + half[:, None] * xg).ravel()
    w = (half[:, None] * wg).ravel()
    weighted = w * profile.eval(s)
    out = np.empty(y.shape, dtype=complex)
    flat_y, flat_out = y.ravel(), out.reshape(-1)
    step = max(1, (1 << 22) // n)
    for start in range(0, flat_y.size, step):
        block = flat_y[start:start + step]
        flat_out[start:start + step] = np.exp(-1j * np.outer(block, s)) @ weighted
    return out


def spatial_eval(f: BandFunction, x, tol: float = 1e-10):
    """f(x) = (hi-lo)/(4 pi) e^{i(lo+hi)(x-x0)/2} phi_hat((hi-lo)(x0-x)/2)."""
    x = np.asarray(x, dtype=float)
    a, b, x0 = f.band_lo, f.band_hi, f.center
    transform = profile_transform(f.profile, 0.5 * (b - a) * (x0 - x), tol)
    out = (b - a) / (4.0 * math.pi) * np.exp(0.5j * (a + b) * (x - x0)) * transform
    return _out(out, x.ndim == 0)


def derivative_l2_squared(profile: BandProfile) -> float:
    """||phi'||^2 on [-1, 1]."""
    s, w = gauss_legendre(512)
    return float(np.sum(w * np.abs(profile.deriv(1, s)) ** 2))


def chebyshev_tail_bound(f: BandFunction, c: float) -> float:
    """(2/c^2)(1/(hi-lo)) ||phi'||^2: bound on the mass of |f|^2 outside |x-x0| < c."""
    if not c > 0:
        raise ValueError("tail radius c must be positive")
    return 2.0 / c**2 / f.width * derivative_l2_squared(f.profile)


def verify_tail(f: BandFunction, c: float, tol: float = 1e-10) -> tuple[float, float, bool]:
    """Measure int_{|x-x0|>=c} |f|^2 dx and compare it with chebyshev_tail_bound."""
    bound = chebyshev_tail_bound(f, c)
    if f.is_zero():
        return 0.0, bound, True
    # in the transform variable y = (hi-lo)(x0-x)/2 the density oscillates with
    # period about pi, so 16-point panels of length TAIL_PANEL resolve it
    stretch = 0.5 * f.width
    x0 = f.center
    x, w = gauss_legendre(16)
    start = stretch * c
    end = max(2.0 * start, 64.0)
    measured = 0.0
    while True:
        edges = np.linspace(start, end, int(np.ceil((end - start) / TAIL_PANEL)) + 1)
        lo, hi = edges[:-1], edges[1:]
        nodes = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x
        weights = 0.5 * (hi - lo)[:, None] * w / stretch
        density = (np.abs(spatial_eval(f, x0 - nodes / stretch, tol * 1e-2)) ** 2
                   + np.abs(spatial_eval(f, x0 + nodes / stretch, tol * 1e-2)) ** 2)
        piece = float(np.sum(weights * density))
        measured += piece
        if piece < 0.1 * tol:
            break
        if end > 1e5:
            raise QuadratureError("tail integral not converged", measured, piece)
        start, end = end, 2.0 * end
    return measured, bound, measured <= bound + tol
