"""One- and two-term stationary-phase expansions with explicit remainder constants.

For an amplitude U supported in [p1, p2] the integral
I(omega, p0) = int U(p) exp(-i omega (p - p0)^2) dp is compared with

    sqrt(pi) e^{-i pi/4} U(p0) omega^{-1/2}                      (leading term)
    + (sqrt(pi)/4) e^{-3i pi/4} U''(p0) omega^{-3/2}              (second term)

and the remainders are checked against the closed-form constants below.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .bands import BandFunction, fourier_deriv, fourier_eval, sup_norm
from .oracle import OscillatoryIntegral, integrate
from .phase import L_n

SQRT_PI = math.sqrt(math.pi)
# K_1 and K_4: positive roots of the quadratics behind L_1 and L_4
FIRST_BASE = 1.0 / (2.0 * SQRT_PI) + math.sqrt(1.0 / (4.0 * math.pi) + 0.5)
SECOND_BASE = 3.0 * SQRT_PI / 8.0 + math.sqrt(9.0 * math.pi / 64.0 + 0.5)
NORM_INFLATION = 1.01
DEFAULT_TOL = 1e-9
MIN_TOL = 1e-13


def check_delta1(delta1: float) -> None:
    if not 0.5 < delta1 < 1.0:
        raise ValueError(f"delta1={delta1} must lie in the open interval (1/2, 1)")


def check_delta2(delta2: float) -> None:
    if not 2.0 < delta2 < 2.5:
        raise ValueError(f"delta2={delta2} must lie in the open interval (2, 5/2)")


def erdelyi_c1(delta1: float) -> float:
    check_delta1(delta1)
    return SQRT_PI / (2.0 - 2.0 * delta1) * FIRST_BASE ** (2.0 * delta1 - 1.0)


def erdelyi_c2(delta2: float) -> float:
    check_delta2(delta2)
    return SECOND_BASE ** (2.0 * delta2 - 4.0) / (30.0 - 12.0 * delta2)


def cor_c1(delta1: float, p1: float, p2: float) -> float:
    return SQRT_PI + cor_c2(delta1, p1, p2)


def cor_c2(delta1: float, p1: float, p2: float) -> float:
    return erdelyi_c1(delta1) * (p2 - p1) ** (2.0 - 2.0 * delta1)


def cor_c3(delta2: float, p1: float, p2: float) -> float:
    return erdelyi_c2(delta2) * (p2 - p1) ** (5.0 - 2.0 * delta2)


def tilde_c1(delta1: float, p1: float, p2: float) -> float:
    """cor_c1 / (2 pi): constant of the free-evolution sup bound."""
    return cor_c1(delta1, p1, p2) / (2.0 * math.pi)


def tilde_c2(delta1: float, p1: float, p2: float) -> float:
    return cor_c2(delta1, p1, p2) / (2.0 * math.pi)


def first_remainder_constant(delta1: float) -> float:
    """L_1(delta1) / (1 - delta1), which must agree with erdelyi_c1."""
    return L_n(1, delta1) / (1.0 - delta1)


LEADING_PHASE = cmath.exp(-0.25j * math.pi)
SECOND_PHASE = cmath.exp(-0.75j * math.pi)


def leading_term(U: BandFunction, omega: float, p0: float) -> complex:
    if not omega > 0:
        raise ValueError("omega must be positive")
    value = fourier_eval(U, p0)
    if value == 0:
        return 0j
    return SQRT_PI * LEADING_PHASE * value / math.sqrt(omega)


def second_term(U: BandFunction, omega: float, p0: float) -> complex:
    if not omega > 0:
        raise ValueError("omega must be positive")
    if U.smoothness_order < 2:
        raise ValueError("second term needs a twice differentiable amplitude")
    curvature = fourier_deriv(U, 2, p0)
    if curvature == 0:
        return 0j
    return SQRT_PI / 4.0 * SECOND_PHASE * curvature * omega ** -1.5


@dataclass(frozen=True)
class ExpansionReport:
    oracle: complex
    leading: complex
    second: complex
    remainder: complex
    bound: float
    passed: bool
    margin: float
    tol: float
    oracle_error: float = 0.0


def oracle_integral(U: BandFunction, omega: float, p0: float, tol: float):
    oi = OscillatoryIntegral(lambda p: fourier_eval(U, p), U.band_lo, U.band_hi, omega, p0)
    return integrate(oi, tol)


def _auto_tol(bound: float, tol: float | None) -> float:
    if tol is not None:
        return tol
    return max(min(DEFAULT_TOL, 1e-3 * bound), MIN_TOL)


def _report(U, omega, p0, bound, tol, leading=0j, second=0j) -> ExpansionReport:
    tol = _auto_tol(bound, tol)
    result = oracle_integral(U, omega, p0, tol)
    remainder = result.value - leading - second
    allowance = 10.0 * max(tol, result.abs_error_estimate)
    margin = bound + allowance - abs(remainder)
    return ExpansionReport(result.value, leading, second, remainder, bound, margin >= 0.0,
                           margin, tol, result.abs_error_estimate)


def verify_one_term(U: BandFunction, omega: float, p0: float, delta1: float = 0.75,
                       tol: float | None = None) -> ExpansionReport:
    """One-term expansion; remainder bound C1(d1) (p2-p1)^{2-2d1} ||U'|| omega^{-d1}."""
    check_delta1(delta1)
    if U.smoothness_order < 1:
        raise ValueError("one-term expansion needs a C^1 amplitude")
    width = U.width
    norm = NORM_INFLATION * sup_norm(U, 1)
    bound = erdelyi_c1(delta1) * width ** (2.0 - 2.0 * delta1) * norm * omega**-delta1
    return _report(U, omega, p0, bound, tol, leading=leading_term(U, omega, p0))


def verify_two_term(U: BandFunction, omega: float, p0: float, delta2: float = 2.25,
                       tol: float | None = None) -> ExpansionReport:
    """Two-term expansion; remainder bound C2(d2) (p2-p1)^{5-2d2} ||U''''|| omega^{-d2}."""
    check_delta2(delta2)
    if U.smoothness_order < 4:
        raise ValueError("two-term expansion needs a C^4 amplitude")
    width = U.width
    norm = NORM_INFLATION * sup_norm(U, 4)
    bound = erdelyi_c2(delta2) * width ** (5.0 - 2.0 * delta2) * norm * omega**-delta2
    return _report(U, omega, p0, bound, tol, leading=leading_term(U, omega, p0),
                   second=second_term(U, omega, p0))


PACKAGED_MODES = ("i", "ii", "iii", "iv")


def verify_packaged(U: BandFunction, omega: float, p0: float, mode: str,
                         delta1: float = 0.75, delta2: float = 2.25,
                         tol: float | None = None) -> ExpansionReport:
    """Packaged estimates.

    i   omega >= 1:         |I| <= cor_c1 (||U|| + ||U'||) omega^{-1/2}
    ii  p0 in [p1, p2]:     |I - leading| <= cor_c2 ||U'|| omega^{-d1}
    iii p0 outside:         |I| <= cor_c2 ||U'|| omega^{-d1}
    iv  p0 outside, C^4:    |I| <= cor_c3 ||U''''|| omega^{-d2}
    """
    if mode not in PACKAGED_MODES:
        raise ValueError(f"mode must be one of {PACKAGED_MODES}")
    p1, p2 = U.band_lo, U.band_hi
    inside = p1 <= p0 <= p2
    if mode == "i":
        if omega < 1:
            raise ValueError("mode i needs omega >= 1")
        norm = NORM_INFLATION * (sup_norm(U, 0) + sup_norm(U, 1))
        bound = cor_c1(delta1, p1, p2) * norm / math.sqrt(omega)
        return _report(U, omega, p0, bound, tol)
    if mode == "ii":
        if not inside:
            raise ValueError("mode ii needs p0 inside the band")
        bound = cor_c2(delta1, p1, p2) * NORM_INFLATION * sup_norm(U, 1) * omega**-delta1
        return _report(U, omega, p0, bound, tol, leading=leading_term(U, omega, p0))
    if inside:
        raise ValueError(f"mode {mode} needs p0 outside the band")
    if mode == "iii":
        bound = cor_c2(delta1, p1, p2) * NORM_INFLATION * sup_norm(U, 1) * omega**-delta1
        return _report(U, omega, p0, bound, tol)
    if U.smoothness_order < 4:
        raise ValueError("mode iv needs a C^4 amplitude")
    bound = cor_c3(delta2, p1, p2) * NORM_INFLATION * sup_norm(U, 4) * omega**-delta2
    return _report(U, omega, p0, bound, tol)
