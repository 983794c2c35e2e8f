"""First two Dyson-Phillips terms of i u_t = -u_xx + V u and their cone estimates.

    S1(t)u0(x) = (1/2pi) int u0_hat(p) exp(-i t p^2 + i x p) dp
    S2(t)u0(x) = (1/2pi) int W(t,p) exp(-i t p^2 + i x p) dp
    W(t,p)     = -i int_0^t int V_hat(y) u0_hat(p-y) exp(-i tau q(y,p)) dy dtau,
    q(y,p)     = (p-y)^2 - p^2 = y (y - 2p).

Both terms are evaluated in the factorized form exp(i x^2/4t) int A(p)
exp(-i t (p - xi)^2) dp with xi = x/2t, which is an oscillatory integral with
stationary point xi.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .bands import BandFunction, fourier_deriv, fourier_eval, sup_norm, w_norm
from .expansion import (LEADING_PHASE, NORM_INFLATION, SECOND_BASE, check_delta1,
                        check_delta2, tilde_c1, tilde_c2)
from .oracle import OscillatoryIntegral, integrate, integrate_time_kernel
from .quad import batched_integrate

TWO_PI = 2.0 * math.pi
LEADING_FACTOR = 1.0 / (2.0 * math.sqrt(math.pi))
SERIES_CUTOFF = 0.5


@dataclass(frozen=True)
class Cone:
    """{(t, x): t > 0, 2 p_lo <= x/t <= 2 p_hi}."""

    p_lo: float
    p_hi: float

    def contains(self, t: float, x: float) -> bool:
        return t > 0 and 2.0 * self.p_lo <= x / t <= 2.0 * self.p_hi

    def contains_xi(self, xi: float) -> bool:
        return self.p_lo <= xi <= self.p_hi


@dataclass(frozen=True)
class Direction:
    """The half-line x = 2 p_bar t."""

    p_bar: float

    def contains(self, t: float, x: float) -> bool:
        return t > 0 and math.isclose(x / t, 2.0 * self.p_bar, rel_tol=1e-12, abs_tol=1e-12)

    def x_at(self, t: float) -> float:
        return 2.0 * self.p_bar * t


@dataclass(frozen=True)
class AmplitudeW:
    potential: BandFunction
    initial: BandFunction
    quad_tol: float = 1e-10

    @property
    def support(self) -> tuple[float, float]:
        return (self.initial.band_lo + self.potential.band_lo,
                self.initial.band_hi + self.potential.band_hi)

    def is_zero(self) -> bool:
        return self.potential.is_zero() or self.initial.is_zero()

    def value(self, t: float, p: float) -> complex:
        return w_eval(self, t, p)


def _chirp_phase(t: float, xi: float) -> complex:
    # exp(i x^2 / 4t) written as exp(i t xi^2)
    return cmath.exp(1j * t * xi * xi)


def s1_result(u0: BandFunction, t: float, x: float, tol: float = 1e-10):
    """(value, error estimate) of S1(t)u0(x)."""
    if not t > 0:
        raise ValueError("S1 needs t > 0")
    if u0.is_zero():
        return 0j, 0.0
    xi = x / (2.0 * t)
    oi = OscillatoryIntegral(lambda p: fourier_eval(u0, p) / TWO_PI, u0.band_lo, u0.band_hi,
                             t, xi, amplitude_frequency=abs(u0.center))
    result = integrate(oi, tol)
    return _chirp_phase(t, xi) * result.value, result.abs_error_estimate


def s1_eval(u0: BandFunction, t: float, x: float, tol: float = 1e-10) -> complex:
    return s1_result(u0, t, x, tol)[0]


def s1_leading(u0: BandFunction, t: float, x: float) -> complex:
    xi = x / (2.0 * t)
    return LEADING_FACTOR * LEADING_PHASE * _chirp_phase(t, xi) * fourier_eval(u0, xi) / math.sqrt(t)


def s2_leading(W_values: complex, t: float, x: float) -> complex:
    """Leading term of S2 given the amplitude value at xi = x/2t."""
    xi = x / (2.0 * t)
    return LEADING_FACTOR * LEADING_PHASE * _chirp_phase(t, xi) * W_values / math.sqrt(t)


def interaction_interval(W: AmplitudeW, p):
    """I_p = [a, b] intersected with [p - p2, p - p1]; lo > hi when empty."""
    p = np.asarray(p, dtype=float)
    lo = np.maximum(W.potential.band_lo, p - W.initial.band_hi)
    hi = np.minimum(W.potential.band_hi, p - W.initial.band_lo)
    return lo, hi


def _time_factor(t: float, q: np.ndarray) -> np.ndarray:
    """int_0^t exp(-i tau q) dtau = t exp(-iz/2) sinc(z/2), z = t q."""
    z = t * q
    return t * np.exp(-0.5j * z) * np.sinc(z / TWO_PI)


def _first_moment(z: np.ndarray) -> np.ndarray:
    """int_0^1 s exp(-i z s) ds, with a series near z = 0."""
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < SERIES_CUTOFF
    zs = z[small]
    term = np.ones(zs.shape, dtype=complex)
    acc = term / 2.0
    for n in range(1, 20):
        term = term * (-1j * zs) / n
        acc = acc + term / (n + 2)
    out[small] = acc
    zl = z[~small]
    out[~small] = (np.exp(-1j * zl) * (1.0 + 1j * zl) - 1.0) / (zl * zl)
    return out


def _y_frequency(W: AmplitudeW, t: float, p: np.ndarray) -> np.ndarray:
    reach = np.maximum(np.abs(p - W.potential.band_lo), np.abs(p - W.potential.band_hi))
    return 2.0 * t * reach + abs(W.potential.center) + abs(W.initial.center)


def w_values(W: AmplitudeW, t: float, p, tol: float | None = None) -> np.ndarray:
    """W(t, p) for an array of p, by exact integration in tau and quadrature in y."""
    if t < 0:
        raise ValueError("W needs t >= 0")
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape, dtype=complex)
    if t == 0 or W.is_zero():
        return out
    tol = W.quad_tol if tol is None else tol
    flat = p.ravel()
    lo, hi = interaction_interval(W, flat)

    def integrand(rows, y):
        pr = flat[rows][:, None]
        q = y * (y - 2.0 * pr)
        return (-1j * fourier_eval(W.potential, y) * fourier_eval(W.initial, pr - y)
                * _time_factor(t, q))

    values, _ = batched_integrate(integrand, lo, hi, tol, frequency=_y_frequency(W, t, flat),
                                  rounding_scale=1.0 + t * np.abs(flat) ** 2)
    out.reshape(-1)[:] = values
    return out


def w_eval(W: AmplitudeW, t: float, p: float, method: str = "fubini",
           tol: float | None = None) -> complex:
    """W(t, p).  ``method="iterated"`` integrates the inner y-integral at each tau."""
    if method == "fubini":
        return complex(w_values(W, t, np.array([p]), tol)[0])
    if method != "iterated":
        raise ValueError("method must be 'fubini' or 'iterated'")
    if t < 0:
        raise ValueError("W needs t >= 0")
    if t == 0 or W.is_zero():
        return 0j
    tol = W.quad_tol if tol is None else tol
    lo, hi = interaction_interval(W, p)
    lo, hi = float(lo), float(hi)
    if lo >= hi:
        return 0j
    inner_tol = 0.1 * tol / max(t, 1.0)
    q_max = max(abs(y * (y - 2.0 * p)) for y in np.linspace(lo, hi, 65))
    total = 0j
    for t_lo, t_hi in ((0.0, min(t, 1.0)), (1.0, t)):
        if t_hi <= t_lo:
            continue
        result = integrate_time_kernel(
            lambda taus: _inner_tau(W, p, lo, hi, taus, inner_tol), t_lo, t_hi,
            tol=0.5 * tol, frequency=q_max)
        total += result.value
    return -1j * total


def _inner_tau(W: AmplitudeW, p: float, lo: float, hi: float, taus: np.ndarray,
               tol: float) -> np.ndarray:
    """int_{I_p} V_hat(y) u0_hat(p - y) exp(-i tau q(y, p)) dy for every tau node."""
    flat = taus.ravel()
    reach = max(abs(p - lo), abs(p - hi))
    freq = 2.0 * flat * reach + abs(W.potential.center) + abs(W.initial.center)

    def integrand(rows, y):
        tau = flat[rows][:, None]
        return (fourier_eval(W.potential, y) * fourier_eval(W.initial, p - y)
                * np.exp(-1j * tau * y * (y - 2.0 * p)))

    values, _ = batched_integrate(integrand, np.full(flat.size, lo), np.full(flat.size, hi),
                                  tol, frequency=freq)
    return values.reshape(taus.shape)


def w_deriv_values(W: AmplitudeW, t: float, p, tol: float | None = None) -> np.ndarray:
    """d/dp W(t, p) for an array of p."""
    if W.initial.smoothness_order < 1:
        raise ValueError("dW/dp needs a C^1 initial profile")
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape, dtype=complex)
    if t <= 0 or W.is_zero():
        return out
    tol = W.quad_tol if tol is None else tol
    flat = p.ravel()
    lo, hi = interaction_interval(W, flat)

    def integrand(rows, y):
        pr = flat[rows][:, None]
        q = y * (y - 2.0 * pr)
        v = fourier_eval(W.potential, y)
        k = pr - y
        first = -1j * v * fourier_deriv(W.initial, 1, k) * _time_factor(t, q)
        second = 2.0 * y * v * fourier_eval(W.initial, k) * t * t * _first_moment(t * q)
        return first + second

    values, _ = batched_integrate(integrand, lo, hi, tol, frequency=_y_frequency(W, t, flat),
                                  rounding_scale=1.0 + t * np.abs(flat) ** 2)
    out.reshape(-1)[:] = values
    return out


def w_deriv_p(W: AmplitudeW, t: float, p: float, tol: float | None = None) -> complex:
    return complex(w_deriv_values(W, t, np.array([p]), tol)[0])


def s2_direct(W: AmplitudeW, t: float, x: float, tol: float = 1e-9):
    """(value, error) of S2 with W(t, .) evaluated at every outer quadrature node."""
    lo, hi = W.support
    xi = x / (2.0 * t)
    inner_tol = 0.1 * tol / (hi - lo)

    def amplitude(p):
        return w_values(W, t, p, inner_tol) / TWO_PI

    reach = max(abs(W.potential.band_lo), abs(W.potential.band_hi))
    oi = OscillatoryIntegral(amplitude, lo, hi, t, xi,
                             amplitude_frequency=2.0 * t * reach + abs(W.initial.center))
    result = integrate(oi, tol)
    return _chirp_phase(t, xi) * result.value, result.abs_error_estimate + 0.1 * tol


def s2_result(W: AmplitudeW, t: float, x: float, tol: float = 1e-9, method: str = "auto"):
    """(value, error) of S2(t)u0(x).

    ``split`` rewrites S2 through the time-independent amplitude and is cheap at
    large t; ``direct`` integrates W(t, .) itself.  ``auto`` uses ``split`` when
    the potential admits it.
    """
    if not t > 0:
        raise ValueError("S2 needs t > 0")
    if W.is_zero():
        return 0j, 0.0
    if method not in ("auto", "direct", "split"):
        raise ValueError("method must be 'auto', 'direct' or 'split'")
    if method == "direct":
        return s2_direct(W, t, x, tol)
    from . import amplitude

    if method == "auto" and not amplitude.split_admissible(W.potential, W.initial):
        return s2_direct(W, t, x, tol)
    return amplitude.s2_split(W.potential, W.initial, t, x, tol)


def s2_eval(W: AmplitudeW, t: float, x: float, tol: float = 1e-9, method: str = "auto") -> complex:
    return s2_result(W, t, x, tol, method)[0]


def m_constants(a: float, b: float, delta2: float = 2.25) -> tuple[float, float]:
    """(M1, M2): uniform-in-t bounds on |W| and |dW/dp| per unit norm product."""
    check_delta2(delta2)
    if not a < b:
        raise ValueError("need a < b")
    width = b - a
    tail = SECOND_BASE ** (2.0 * delta2 - 4.0) * width ** (5.0 - 2.0 * delta2)
    reach = max(abs(a), abs(b))
    m1 = width + 5.0 / ((5.0 - 2.0 * delta2) * (delta2 - 1.0)) * tail
    m2 = (m1 + reach * width
          + tail * (12.0 + 30.0 * reach) / ((15.0 - 6.0 * delta2) * (delta2 - 2.0)))
    return m1, m2


def c_constants(delta1: float, a: float, b: float, p1: float, p2: float,
                delta2: float = 2.25) -> tuple[float, float]:
    """(c1, c2) of the S2 sup and cone estimates."""
    check_delta1(delta1)
    m1, m2 = m_constants(a, b, delta2)
    lo, hi = p1 + a, p2 + b
    return tilde_c1(delta1, lo, hi) * (m1 + m2), tilde_c2(delta1, lo, hi) * m2


@dataclass(frozen=True)
class ConeRow:
    """One grid point of a cone check.  sup_* is NaN when t < 1 (no sup estimate)."""

    t: float
    x: float
    xi: float
    value: complex
    leading: complex
    in_cone: bool
    sup_lhs: float
    sup_bound: float
    cone_lhs: float
    cone_bound: float
    allowance: float
    passed: bool


def _row(t, x, value, leading, in_cone, sup_bound, cone_bound, allowance) -> ConeRow:
    xi = x / (2.0 * t)
    sup_lhs = abs(value) if t >= 1 else math.nan
    sup_bound = sup_bound if t >= 1 else math.nan
    cone_lhs = abs(value - leading) if in_cone else abs(value)
    ok = cone_lhs <= cone_bound + allowance
    if t >= 1:
        ok = ok and sup_lhs <= sup_bound + allowance
    return ConeRow(t, x, xi, value, leading, in_cone, sup_lhs, sup_bound, cone_lhs, cone_bound,
                   allowance, ok)


def verify_s1_cone(u0: BandFunction, t_grid, xi_grid, delta1: float = 0.75,
                   tol: float = 1e-10) -> list[ConeRow]:
    """Sup bound (t >= 1), inside-cone expansion and outside-cone decay of S1."""
    check_delta1(delta1)
    p1, p2 = u0.band_lo, u0.band_hi
    cone = Cone(p1, p2)
    u_sup = NORM_INFLATION * sup_norm(u0, 0)
    du_sup = NORM_INFLATION * sup_norm(u0, 1)
    rows = []
    for t in t_grid:
        sup_bound = tilde_c1(delta1, p1, p2) * (u_sup + du_sup) / math.sqrt(t)
        cone_bound = tilde_c2(delta1, p1, p2) * du_sup * t**-delta1
        for xi in xi_grid:
            x = 2.0 * xi * t
            value, err = s1_result(u0, t, x, tol)
            inside = cone.contains_xi(xi)
            leading = s1_leading(u0, t, x) if inside else 0j
            rows.append(_row(t, x, value, leading, inside, sup_bound, cone_bound,
                             10.0 * max(tol, err)))
    return rows


def check_s2_hypotheses(W: AmplitudeW) -> None:
    p1, p2 = W.initial.band_lo, W.initial.band_hi
    if p1 <= 0.0 <= p2:
        raise ValueError("S2 estimates need 0 outside the initial band")
    if W.initial.smoothness_order < 5:
        raise ValueError("S2 estimates need a C^5 initial profile")
    if W.potential.smoothness_order < 4:
        raise ValueError("S2 estimates need a C^4 potential profile")


def s2_norm_product(W: AmplitudeW) -> tuple[float, float]:
    """(||V_hat||_{W4} ||u0_hat||_{W4}, ||V_hat||_{W4} ||u0_hat||_{W5}), inflated."""
    v4 = NORM_INFLATION * w_norm(W.potential, 4)
    return (v4 * NORM_INFLATION * w_norm(W.initial, 4),
            v4 * NORM_INFLATION * w_norm(W.initial, 5))


def verify_s2_cone(W: AmplitudeW, t_grid, xi_grid, delta1: float = 0.75,
                   delta2: float = 2.25, tol: float = 1e-9, method: str = "auto") -> list[ConeRow]:
    """Sup bound (t >= 1), shifted-cone expansion and outside decay of S2."""
    check_delta1(delta1)
    check_s2_hypotheses(W)
    a, b = W.potential.band_lo, W.potential.band_hi
    p1, p2 = W.initial.band_lo, W.initial.band_hi
    c1, c2 = c_constants(delta1, a, b, p1, p2, delta2)
    _, norm5 = s2_norm_product(W)
    cone = Cone(*W.support)
    rows = []
    for t in t_grid:
        sup_bound = c1 * norm5 / math.sqrt(t)
        cone_bound = c2 * norm5 * t**-delta1
        for xi in xi_grid:
            x = 2.0 * xi * t
            value, err = s2_result(W, t, x, tol, method)
            inside = cone.contains_xi(xi)
            leading = s2_leading(w_eval(W, t, xi, tol=0.1 * tol), t, x) if inside else 0j
            rows.append(_row(t, x, value, leading, inside, sup_bound, cone_bound,
                             10.0 * max(tol, err)))
    return rows


def w_bound_rows(W: AmplitudeW, t_values, delta2: float = 2.25, n_grid: int = 201,
                 tol: float = 1e-10) -> list[tuple[float, float, float, float, float]]:
    """(t, max|W|, M1 bound, max|dW/dp|, M2 bound) sampled on a p-grid over supp W."""
    check_s2_hypotheses(W)
    m1, m2 = m_constants(W.potential.band_lo, W.potential.band_hi, delta2)
    norm4, norm5 = s2_norm_product(W)
    grid = np.linspace(*W.support, n_grid)
    out = []
    for t in t_values:
        w = float(np.max(np.abs(w_values(W, t, grid, tol))))
        dw = float(np.max(np.abs(w_deriv_values(W, t, grid, tol))))
        out.append((t, w, m1 * norm4, dw, m2 * norm5))
    return out
