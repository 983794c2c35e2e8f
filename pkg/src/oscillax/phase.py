"""Iterated primitives of s -> exp(-i omega s^2) along a descending complex ray.

phi_n(s, omega) = ((-1)^n / (n-1)!) * int_{Lambda(s)} (z - s)^{n-1} exp(-i omega z^2) dz,
Lambda(s) = {s + t e^{-i pi/4} : t >= 0}.  On that ray the integrand decays
like exp(-omega t^2 - sqrt(2) omega s t), so plain Gauss-Legendre on a
truncated interval is enough.  d/ds phi_n = phi_{n-1} and d/ds phi_1 = exp(-i omega s^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quad import QuadratureError, gauss_legendre

ORDERS = (1, 2, 3, 4)
SQRT2 = math.sqrt(2.0)


def _check_order(n: int) -> None:
    if n not in ORDERS:
        raise ValueError(f"primitive order must be one of {ORDERS}, got {n}")


def phi_n_at_zero(n: int, omega: float) -> complex:
    """Closed form ((-1)^n/(n-1)!) (1/2) Gamma(n/2) e^{-i pi n/4} omega^{-n/2}."""
    _check_order(n)
    if not omega > 0:
        raise ValueError("omega must be positive")
    magnitude = 0.5 * math.gamma(n / 2) / math.factorial(n - 1) * omega ** (-n / 2)
    return (-1) ** n * magnitude * complex(math.cos(-math.pi * n / 4), math.sin(-math.pi * n / 4))


def phi_n(n: int, s: float, omega: float, quad_tol: float = 1e-10,
          max_panels: int = 1 << 12) -> complex:
    """phi_n(s, omega) with absolute error below quad_tol.

    Uses phi_n(s, omega) = omega^{-n/2} phi_n(s sqrt(omega), 1) and integrates
    the unit-frequency ray integral up to the point where the integrand
    modulus t^{n-1} exp(-t^2 - sqrt(2) r t) is negligible.
    """
    _check_order(n)
    if s < 0:
        raise ValueError("phi_n is defined for s >= 0")
    if not omega > 0:
        raise ValueError("omega must be positive")
    r = s * math.sqrt(omega)
    prefactor = (-1) ** n / math.factorial(n - 1) * omega ** (-n / 2)
    # tolerance on the unit-frequency integral; also relative when omega is large
    target = min(quad_tol / abs(prefactor), quad_tol)
    length = _truncation(n, r, 0.01 * target)
    panels = max(1, int(math.ceil(SQRT2 * r * length / 8.0)))
    previous = _ray_integral(n, r, length, panels)
    while True:
        panels *= 2
        current = _ray_integral(n, r, length, panels)
        if abs(current - previous) < 0.5 * target:
            break
        if panels > max_panels:
            raise QuadratureError(f"phi_{n}({s}, {omega}) not converged",
                                  prefactor * current, abs(prefactor * (current - previous)))
        previous = current
    rotation = complex(math.cos(-math.pi * n / 4), math.sin(-math.pi * n / 4))
    return prefactor * rotation * complex(math.cos(r * r), -math.sin(r * r)) * current


def _truncation(n: int, r: float, target: float) -> float:
    """Smallest T (up to a safety factor) with T^{n-1} exp(-T^2 - sqrt(2) r T) < target."""
    budget = max(math.log(1.0 / target), 1.0)
    t = 1.0
    for _ in range(50):
        level = budget + (n - 1) * math.log(max(t, 1.0))
        # positive root of t^2 + sqrt(2) r t = level
        t_new = 2.0 * level / (SQRT2 * r + math.sqrt(2.0 * r * r + 4.0 * level))
        if abs(t_new - t) < 1e-12 * t_new:
            break
        t = t_new
    return 1.05 * t_new


def _ray_integral(n: int, r: float, length: float, panels: int) -> complex:
    x, w = gauss_legendre(64)
    edges = np.linspace(0.0, length, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    t = (0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x).ravel()
    weights = (0.5 * (hi - lo)[:, None] * w).ravel()
    values = t ** (n - 1) * np.exp(-t * t - SQRT2 * r * t) * np.exp(-1j * SQRT2 * r * t)
    return complex(np.sum(weights * values))


@dataclass(frozen=True)
class ErdelyiConstants:
    """Coefficients of a_n K^2 - b_n K - c_n = 0 and L_n(delta) = a_n K_n^{2 delta - n}."""

    n: int
    a_n: float
    b_n: float
    c_n: float

    @property
    def K_n(self) -> float:
        a, b, c = self.a_n, self.b_n, self.c_n
        return (b + math.sqrt(b * b + 4.0 * a * c)) / (2.0 * a)

    def delta_range(self) -> tuple[float, float]:
        return self.n / 2, (self.n + 1) / 2

    def L_n(self, delta: float) -> float:
        lo, hi = self.delta_range()
        if not lo < delta < hi:
            raise ValueError(f"delta={delta} outside the open interval ({lo}, {hi})")
        return self.a_n * self.K_n ** (2.0 * delta - self.n)


@lru_cache(maxsize=None)
def erdelyi_constants(n: int) -> ErdelyiConstants:
    _check_order(n)
    if n == 1:
        root_pi = math.sqrt(math.pi)
        return ErdelyiConstants(1, root_pi / 2, 0.5, root_pi / 4)
    a = math.gamma(n / 2) / (2 * math.factorial(n - 1))
    b = math.gamma((n - 1) / 2) / (4 * math.factorial(n - 2))
    c = math.gamma(n / 2) / (4 * math.factorial(n - 1))
    return ErdelyiConstants(n, a, b, c)


def L_n(n: int, delta: float) -> float:
    return erdelyi_constants(n).L_n(delta)


def check_phi_bound(n: int, delta: float, s: float, omega: float,
                    quad_tol: float = 1e-10) -> tuple[float, float, bool]:
    """Compare |phi_n(s, omega)| with L_n(delta) s^{n - 2 delta} omega^{-delta}."""
    if not s > 0:
        raise ValueError("the bound is stated for s > 0")
    rhs = L_n(n, delta) * s ** (n - 2 * delta) * omega ** (-delta)
    lhs = abs(phi_n(n, s, omega, quad_tol))
    return lhs, rhs, lhs <= rhs + quad_tol
