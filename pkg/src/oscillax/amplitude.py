"""Time-independent part of the second Dyson amplitude.

With V_tilde(y) = V_hat(y)/y (continuously extended through y = 0), q(y,p) =
y(y - 2p) and q_tilde(y,p) = 2(y - 2p)(y - p), integrating the tau-integral
of W exactly and then by parts in y gives W(t,p) = W1(p) + W2(t,p)/t with

    W1(p)   = -int V_tilde(y) u0_hat(p-y) / (y - 2p) dy
    W2(t,p) = -i int d/dy[V_tilde(y) u0_hat(p-y) / q_tilde(y,p)] exp(-i t q(y,p)) dy

for p outside [a/2, b/2].  W1 gives the t^{-1/2} profile of S2 along rays.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .bands import BandFunction, CosBump, fourier_deriv, fourier_eval, sup_norm
from .dyson import (LEADING_FACTOR, TWO_PI, AmplitudeW, _chirp_phase, c_constants,
                    check_s2_hypotheses, interaction_interval, s2_leading, s2_norm_product,
                    s2_result)
from .expansion import LEADING_PHASE, NORM_INFLATION, ExpansionReport, check_delta1
from .oracle import OscillatoryIntegral, integrate
from .quad import QuadratureError, batched_integrate

ROOT_TOL = 1e-12
POSITIVITY_SAMPLES = 32
ARC_SAMPLES = 2048
MAX_CHEB_DEGREE = 512


def q(y, p):
    return (p - y) ** 2 - p**2


def q_tilde(y, p):
    return 2.0 * (y - 2.0 * p) * (y - p)


@dataclass(frozen=True)
class TildeV:
    """V_hat(y)/y extended continuously through 0.

    When the band contains 0, the potential profile must carry the factor
    (s - c)^j, j >= 1, with c the profile coordinate of y = 0; the quotient is
    then an exact band function (``factored``) and no division happens.
    """

    base: BandFunction
    factored: BandFunction | None = None

    @property
    def band_lo(self) -> float:
        return self.base.band_lo

    @property
    def band_hi(self) -> float:
        return self.base.band_hi

    def eval(self, y):
        if self.factored is not None:
            return fourier_eval(self.factored, y)
        y = np.asarray(y, dtype=float)
        return fourier_eval(self.base, y) / y

    def deriv(self, y):
        if self.factored is not None:
            return fourier_deriv(self.factored, 1, y)
        y = np.asarray(y, dtype=float)
        return fourier_deriv(self.base, 1, y) / y - fourier_eval(self.base, y) / (y * y)

    def w1_norm(self, n: int = 4096) -> float:
        """max(sup |V_tilde|, sup |V_tilde'|) on the band."""
        if self.factored is not None:
            return max(sup_norm(self.factored, 0, n), sup_norm(self.factored, 1, n))
        grid = np.linspace(self.band_lo, self.band_hi, n)
        return float(max(np.max(np.abs(self.eval(grid))), np.max(np.abs(self.deriv(grid)))))


def tilde_v(V: BandFunction) -> TildeV:
    """Build V_tilde or raise ValueError when V_hat/y has no C^1 extension we can certify."""
    a, b = V.band_lo, V.band_hi
    if V.is_zero() or not a <= 0.0 <= b:
        return TildeV(V)
    profile = V.profile
    root = -(a + b) / (b - a)
    if not isinstance(profile, CosBump) or profile.power < 1 or abs(profile.root - root) > ROOT_TOL:
        raise ValueError(
            "band contains 0: the potential profile needs an explicit factor (s - c)^j, j >= 1,"
            f" with c = {root:.17g}")
    reduced = CosBump(profile.m, profile.power - 1, profile.root,
                      profile.scale * 2.0 / (b - a), profile.phase)
    return TildeV(V, BandFunction(reduced, a, b, V.center))


def split_admissible(V: BandFunction, u0: BandFunction) -> bool:
    """True when y + 2k never vanishes for y in [a,b], k in [p1,p2] and V_tilde exists."""
    if -2.0 * u0.band_lo >= V.band_lo and -2.0 * u0.band_hi <= V.band_hi:
        return False
    try:
        tilde_v(V)
    except ValueError:
        return False
    return True


def _check_outside_half_band(tv: TildeV, p) -> None:
    p = np.asarray(p, dtype=float)
    bad = (p >= 0.5 * tv.band_lo) & (p <= 0.5 * tv.band_hi)
    if np.any(bad):
        raise ValueError(f"p must lie outside [a/2, b/2] = [{0.5 * tv.band_lo}, {0.5 * tv.band_hi}]")


def _frequency(tv: TildeV, u0: BandFunction) -> float:
    return abs(tv.base.center) + abs(u0.center)


def _w1_values(tv: TildeV, u0: BandFunction, p, tol: float = 1e-12):
    """(W1(p), error) on I_p, without the [a/2, b/2] check."""
    p = np.asarray(p, dtype=float)
    flat = p.ravel()
    W = AmplitudeW(tv.base, u0)
    lo, hi = interaction_interval(W, flat)

    def integrand(rows, y):
        pr = flat[rows][:, None]
        return tv.eval(y) * fourier_eval(u0, pr - y) / (2.0 * pr - y)

    values, errors = batched_integrate(integrand, lo, hi, tol, frequency=_frequency(tv, u0))
    return values.reshape(p.shape), errors.reshape(p.shape)


def w1_eval(tv: TildeV, u0: BandFunction, p, tol: float = 1e-12):
    _check_outside_half_band(tv, p)
    values, _ = _w1_values(tv, u0, p, tol)
    return complex(values) if np.ndim(p) == 0 else values


def w2_eval(tv: TildeV, u0: BandFunction, t: float, p, tol: float = 1e-12):
    if not t > 0:
        raise ValueError("W2 needs t > 0")
    if u0.band_lo <= 0.0 <= u0.band_hi:
        raise ValueError("W2 needs 0 outside the initial band")
    _check_outside_half_band(tv, p)
    p_arr = np.asarray(p, dtype=float)
    flat = p_arr.ravel()
    lo, hi = interaction_interval(AmplitudeW(tv.base, u0), flat)

    def integrand(rows, y):
        pr = flat[rows][:, None]
        k = pr - y
        v, dv = tv.eval(y), tv.deriv(y)
        u, du = fourier_eval(u0, k), fourier_deriv(u0, 1, k)
        qt = q_tilde(y, pr)
        dqt = 2.0 * (2.0 * y - 3.0 * pr)
        quotient_rule = (dv * u - v * du) / qt - v * u * dqt / (qt * qt)
        return -1j * quotient_rule * np.exp(-1j * t * y * (y - 2.0 * pr))

    reach = np.maximum(np.abs(flat - tv.band_lo), np.abs(flat - tv.band_hi))
    values, _ = batched_integrate(integrand, lo, hi, tol,
                                  frequency=2.0 * t * reach + _frequency(tv, u0),
                                  rounding_scale=1.0 + t * flat**2)
    values = values.reshape(p_arr.shape)
    return complex(values) if p_arr.ndim == 0 else values


def c3_constants(a: float, b: float, p1: float, p2: float, eps: float) -> tuple[float, float]:
    """(c3_tilde, c3): W2 bound per unit ||V_tilde||_{W1} ||u0_hat||_{W1}, and c3_tilde/(2 sqrt(pi))."""
    if p1 <= 0.0 <= p2:
        raise ValueError("need 0 outside [p1, p2]")
    if not 0.0 < eps < 0.5 * (p2 - p1):
        raise ValueError(f"eps={eps} must lie in (0, (p2-p1)/2)")
    near = min(abs(p1), abs(p2))
    slope = max(abs(2.0 * a - 3.0 * (p2 + b)), abs(2.0 * b - 3.0 * (p1 + a)))
    c3t = (b - a) / (2.0 * near) / eps + slope * (b - a) / (8.0 * near * near) / eps**2
    return c3t, c3t * LEADING_FACTOR


def default_eps(p1: float, p2: float) -> float:
    return min(0.25, 0.25 * (p2 - p1))


def admissible_region(a: float, b: float, p1: float, p2: float, eps: float) -> list[tuple[float, float]]:
    """[p1+a, p2+b] minus the open-closed forbidden strip [a/2 - eps, b/2 + eps]."""
    lo, hi = p1 + a, p2 + b
    f_lo, f_hi = 0.5 * a - eps, 0.5 * b + eps
    pieces = []
    if lo < f_lo:
        pieces.append((lo, min(hi, f_lo)))
    if hi > f_hi:
        pieces.append((max(lo, f_hi), hi))
    return [(l, h) for l, h in pieces if l < h]


def is_admissible(xi: float, a: float, b: float, p1: float, p2: float, eps: float) -> bool:
    return any(l <= xi <= h for l, h in admissible_region(a, b, p1, p2, eps)) and not (
        0.5 * a - eps <= xi <= 0.5 * b + eps)


# ---- Chebyshev interpolation of smooth amplitudes ------------------------------------------

def _cheb_nodes(n: int) -> np.ndarray:
    return np.cos(math.pi * (np.arange(n) + 0.5) / n)


def _cheb_coefficients(values: np.ndarray) -> np.ndarray:
    """Coefficients along the last axis from samples at first-kind Chebyshev nodes."""
    n = values.shape[-1]
    theta = math.pi * (np.arange(n) + 0.5) / n
    basis = np.cos(np.outer(np.arange(n), theta))
    c = values @ basis.T * (2.0 / n)
    c[..., 0] *= 0.5
    return c


@dataclass(frozen=True)
class ChebPiece:
    lo: float
    hi: float
    coefficients: np.ndarray
    tail: float

    def __call__(self, p: np.ndarray) -> np.ndarray:
        s = (2.0 * p - (self.lo + self.hi)) / (self.hi - self.lo)
        return np.polynomial.chebyshev.chebval(s, self.coefficients)


def chebyshev_fit(f, lo: float, hi: float, tol: float, start: int = 16) -> ChebPiece:
    """Interpolate f on [lo, hi], doubling the degree until the coefficient tail is below tol."""
    n = start
    while True:
        s = _cheb_nodes(n)
        c = _cheb_coefficients(f(0.5 * (lo + hi) + 0.5 * (hi - lo) * s))
        tail = float(np.sum(np.abs(c[-max(2, n // 8):])))
        if tail < tol:
            return ChebPiece(lo, hi, c, tail)
        if n >= MAX_CHEB_DEGREE:
            raise QuadratureError(f"Chebyshev fit on [{lo}, {hi}] stalled (tail {tail:.3g})",
                                  0j, tail)
        n *= 2


@dataclass
class W1Interpolant:
    """Piecewise Chebyshev interpolant of W1 on its support, split where I_p changes shape."""

    tv: TildeV
    u0: BandFunction
    tol: float = 1e-12
    pieces: list[ChebPiece] = field(default_factory=list)

    def __post_init__(self):
        a, b = self.tv.band_lo, self.tv.band_hi
        p1, p2 = self.u0.band_lo, self.u0.band_hi
        cuts = sorted({p1 + a, p1 + b, p2 + a, p2 + b})
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            self.pieces.append(chebyshev_fit(
                lambda p: _w1_values(self.tv, self.u0, p, 0.01 * self.tol)[0], lo, hi, self.tol))

    @property
    def error(self) -> float:
        return sum(piece.tail for piece in self.pieces)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape, dtype=complex)
        for piece in self.pieces:
            mask = (p >= piece.lo) & (p <= piece.hi)
            out[mask] = piece(p[mask])
        return out


_W1_CACHE: dict = {}


def w1_interpolant(tv: TildeV, u0: BandFunction, tol: float) -> W1Interpolant:
    key = (tv, u0, tol)
    if key not in _W1_CACHE:
        _W1_CACHE[key] = W1Interpolant(tv, u0, tol)
    return _W1_CACHE[key]


def _g_interpolant(tv: TildeV, u0: BandFunction, x: float, tol: float) -> ChebPiece:
    """k -> G(k, x) = int V_tilde(y) e^{ixy} / (2k + y) dy on [p1, p2]."""
    a, b = tv.band_lo, tv.band_hi

    def g(k):
        def integrand(rows, y):
            return tv.eval(y) * np.exp(1j * x * y) / (2.0 * k[rows][:, None] + y)

        values, _ = batched_integrate(integrand, np.full(k.size, a), np.full(k.size, b),
                                      0.01 * tol, frequency=abs(x) + abs(tv.base.center),
                                      rounding_scale=1.0 + abs(x) * max(abs(a), abs(b)))
        return values

    return chebyshev_fit(g, u0.band_lo, u0.band_hi, tol)


def s2_split(V: BandFunction, u0: BandFunction, t: float, x: float, tol: float = 1e-9):
    """(value, error) of S2 through W = W1 + (W - W1), each as a t-independent amplitude.

    S2 = e^{ix^2/4t} [ (1/2pi) int W1(p) e^{-it(p-xi)^2} dp
                       - (1/2pi) int u0_hat(k) G(k,x) e^{-it(k-xi)^2} dk ].
    """
    if not split_admissible(V, u0):
        raise ValueError("split evaluation needs y + 2k != 0 on [a,b] x [p1,p2] and V_tilde")
    tv = tilde_v(V)
    xi = x / (2.0 * t)
    lo, hi = u0.band_lo + V.band_lo, u0.band_hi + V.band_hi
    interp_tol = 0.01 * tol
    w1 = w1_interpolant(tv, u0, interp_tol)
    first = integrate(OscillatoryIntegral(lambda p: w1(p) / TWO_PI, lo, hi, t, xi,
                                          amplitude_frequency=_frequency(tv, u0)), 0.4 * tol)
    g = _g_interpolant(tv, u0, x, interp_tol)
    second = integrate(OscillatoryIntegral(lambda k: fourier_eval(u0, k) * g(k) / TWO_PI,
                                           u0.band_lo, u0.band_hi, t, xi,
                                           amplitude_frequency=abs(u0.center)), 0.4 * tol)
    interp_error = (w1.error * (hi - lo) + g.tail * sup_norm(u0, 0) * u0.width) / TWO_PI
    value = _chirp_phase(t, xi) * (first.value - second.value)
    return value, first.abs_error_estimate + second.abs_error_estimate + interp_error


def refined_s2_bound(tv: TildeV, u0: BandFunction, t: float, delta1: float = 0.75,
                      eps: float | None = None, delta2: float = 2.25) -> float:
    a, b = tv.band_lo, tv.band_hi
    p1, p2 = u0.band_lo, u0.band_hi
    eps = default_eps(p1, p2) if eps is None else eps
    _, c2 = c_constants(delta1, a, b, p1, p2, delta2)
    _, c3 = c3_constants(a, b, p1, p2, eps)
    _, norm5 = s2_norm_product(AmplitudeW(tv.base, u0))
    u_w1 = NORM_INFLATION * max(sup_norm(u0, 0), sup_norm(u0, 1))
    return c2 * norm5 * t**-delta1 + c3 * NORM_INFLATION * tv.w1_norm() * u_w1 * t**-1.5


def verify_refined_s2(tv: TildeV, u0: BandFunction, t: float, x: float, delta1: float = 0.75,
                       eps: float | None = None, delta2: float = 2.25,
                       tol: float = 1e-9) -> ExpansionReport:
    """|S2 - (1/2 sqrt(pi)) e^{-i pi/4} e^{ix^2/4t} W1(xi) t^{-1/2}|
    <= c2 ||V_hat||_{W4} ||u0_hat||_{W5} t^{-d1} + c3 ||V_tilde||_{W1} ||u0_hat||_{W1} t^{-3/2}."""
    check_delta1(delta1)
    W = AmplitudeW(tv.base, u0)
    check_s2_hypotheses(W)
    a, b = tv.band_lo, tv.band_hi
    p1, p2 = u0.band_lo, u0.band_hi
    eps = default_eps(p1, p2) if eps is None else eps
    xi = x / (2.0 * t)
    if not is_admissible(xi, a, b, p1, p2, eps):
        raise ValueError(f"xi = {xi} is outside the admissible region for eps = {eps}")
    bound = refined_s2_bound(tv, u0, t, delta1, eps, delta2)
    value, err = s2_result(W, t, x, tol)
    leading = s2_leading(w1_eval(tv, u0, xi, 0.01 * tol), t, x)
    remainder = value - leading
    allowance = 10.0 * max(tol, err)
    margin = bound + allowance - abs(remainder)
    return ExpansionReport(value, leading, 0j, remainder, bound, margin >= 0.0, margin, tol, err)


# ---- positivity of W1 ----------------------------------------------------------------------

def arc_width(values: np.ndarray) -> float:
    """Angular width of the smallest arc holding every nonzero value (2 pi if none fit)."""
    values = np.asarray(values).ravel()
    scale = np.max(np.abs(values)) if values.size else 0.0
    keep = values[np.abs(values) > 1e-9 * scale] if scale > 0 else values[:0]
    if keep.size == 0:
        return 0.0
    angles = np.sort(np.angle(keep))
    gaps = np.diff(np.append(angles, angles[0] + 2.0 * math.pi))
    return float(2.0 * math.pi - np.max(gaps))


def _interior(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + (hi - lo) * (np.arange(1, n + 1) / (n + 1))


@dataclass(frozen=True)
class PositivityInterval:
    lo: float
    hi: float
    arc: float
    min_abs_w1: float
    max_abs_w1: float
    sampled_positive: bool
    best_p: float


@dataclass(frozen=True)
class PositivityReport:
    intervals: list[PositivityInterval]
    geometry_ok: bool
    literal_sign_hypothesis: bool
    messages: list[str]

    @property
    def nonempty(self) -> bool:
        return bool(self.intervals) and all(iv.sampled_positive for iv in self.intervals)

    def best_direction(self) -> float | None:
        """Point with the largest sampled |W1| over all intervals."""
        best = max(self.intervals, key=lambda iv: iv.max_abs_w1, default=None)
        return None if best is None else best.best_p


def _literal_sign_hypothesis(f: BandFunction) -> bool:
    s = _interior(f.band_lo, f.band_hi, ARC_SAMPLES)
    v = fourier_eval(f, s)
    return bool(np.all(np.abs(v.real) > 0) and np.all(np.abs(v.imag) > 0))


def positivity_intervals(tv: TildeV, u0: BandFunction, eps: float | None = None,
                         tol: float = 1e-12) -> PositivityReport:
    """Intervals of directions on which |W1| > 0, certified by a phase-sector argument.

    On each candidate interval, y keeps one sign on I_p and so does 2p - y, so
    W1(p) is an integral of V_hat(y) u0_hat(p-y) times a positive weight, up to
    a fixed sign.  If the phases of V_hat on the relevant half of [a,b] and of
    u0_hat on [p1,p2] fit in arcs of total width < pi, the integral cannot vanish.
    """
    a, b = tv.band_lo, tv.band_hi
    p1, p2 = u0.band_lo, u0.band_hi
    eps = default_eps(p1, p2) if eps is None else eps
    messages: list[str] = []
    geometry = p1 > 0.5 * b - a + eps or p2 < 0.5 * a - b - eps
    literal = _literal_sign_hypothesis(tv.base) and _literal_sign_hypothesis(u0)
    if not geometry:
        messages.append("geometry: need p1 > b/2 - a + eps or p2 < a/2 - b - eps")
        return PositivityReport([], False, literal, messages)
    if not literal:
        messages.append("Re/Im of V_hat or u0_hat vanish somewhere; using the phase-sector test")
    candidates = []
    if not a < 0.0 < b:
        if b > 0:
            eta1 = max(0.0, a)
            candidates.append((p2 + eta1, p2 + b, (eta1, b)))
        if a < 0:
            eta2 = min(0.0, b)
            candidates.append((p1 + a, p1 + eta2, (a, eta2)))
    else:
        candidates.append((p1 + a, p1, (a, 0.0)))
        candidates.append((p2, p2 + b, (0.0, b)))
    u_arc = arc_width(fourier_eval(u0, _interior(p1, p2, ARC_SAMPLES)))
    out = []
    for lo, hi, (y_lo, y_hi) in candidates:
        if not lo < hi:
            continue
        v_arc = arc_width(fourier_eval(tv.base, _interior(y_lo, y_hi, ARC_SAMPLES)))
        arc = v_arc + u_arc
        if arc >= math.pi:
            messages.append(f"({lo}, {hi}): phases span {arc:.3f} rad >= pi; abstaining")
            continue
        samples = _interior(lo, hi, POSITIVITY_SAMPLES)
        values, errors = _w1_values(tv, u0, samples, tol)
        mags = np.abs(values)
        positive = bool(np.all(mags > errors))
        out.append(PositivityInterval(lo, hi, arc, float(np.min(mags)), float(np.max(mags)), positive,
                                      float(samples[int(np.argmax(mags))])))
        if not positive:
            messages.append(f"({lo}, {hi}): sampled |W1| not above its error estimate")
    return PositivityReport(out, True, literal, messages)
