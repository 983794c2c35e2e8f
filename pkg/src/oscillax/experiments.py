"""Scenario orchestration: bound suites, space-time grids, decay slopes, residuals."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import amplitude as amp
from .bands import BandFunction, CosBump, verify_tail
from .dyson import (AmplitudeW, Cone, ConeRow, check_s2_hypotheses, s1_result, s2_leading,
                    s2_result, verify_s1_cone, verify_s2_cone, w_bound_rows)
from .expansion import (check_delta1, check_delta2, verify_packaged, verify_one_term,
                        verify_two_term)
from .phase import check_phi_bound
from .solver import ResidualTable, dyson_residual, grid_for

CHECKS = ("s1_cone", "s2_cone", "thm69", "bounds4", "phi", "tail", "residual")
VERIFY_CHECKS = ("phi", "bounds4", "tail")
PROPAGATE_CHECKS = ("s1_cone", "s2_cone", "thm69", "residual")
S2_CHECKS = ("s2_cone", "thm69")
AMPLITUDE_FLOOR = 1e-12
DEFAULT_T_GRID = (1.0, 3.16, 10.0, 31.6, 100.0, 316.0, 1000.0)
W_BOUND_TIMES = (0.5, 1.0, 10.0, 100.0, 1000.0)
LOCALIZATION_SHARE = 0.9
MIDPOINT_TOL = 0.05
S2_SLOPE_TOL = 0.07


class ScenarioError(ValueError):
    """Invalid scenario or parameter set."""


def worker_count() -> int:
    raw = os.environ.get("OSCILLAX_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ScenarioError(f"OSCILLAX_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ScenarioError("OSCILLAX_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def parallel_map(fn, items) -> list:
    """Ordered map over a thread pool sized by OSCILLAX_THREADS."""
    items = list(items)
    workers = min(worker_count(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def default_xi_grid(u0: BandFunction, V: BandFunction, n: int = 61) -> tuple[float, ...]:
    lo = min(u0.band_lo, u0.band_lo + V.band_lo) - 1.0
    hi = max(u0.band_hi, u0.band_hi + V.band_hi) + 1.0
    return tuple(float(v) for v in np.linspace(lo, hi, n))


def default_slope_grid() -> tuple[float, ...]:
    return tuple(float(v) for v in np.logspace(2.0, 4.0, 9))


def default_outside_grid() -> tuple[float, ...]:
    # starts below t = 1: outside the band |S1| reaches the floor after about two decades
    return tuple(float(v) for v in np.logspace(-0.5, 4.0, 37))


@dataclass(frozen=True)
class Scenario:
    name: str
    initial: BandFunction
    potential: BandFunction
    delta1: float = 0.75
    delta2: float = 2.25
    eps: float | None = None
    tol: float = 1e-10
    s2_tol: float = 1e-9
    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    xi_grid: tuple[float, ...] | None = None
    slope_t_grid: tuple[float, ...] = field(default_factory=default_slope_grid)
    outside_t_grid: tuple[float, ...] = field(default_factory=default_outside_grid)
    checks: frozenset[str] = frozenset(CHECKS)
    suite_cases: int = 200
    seed: int = 20240101
    solver_points: int = 1 << 14
    solver_dt: float = 1e-3
    residual_t: float = 1.0
    epsilons: tuple[float, ...] = (0.0125, 0.025, 0.05, 0.1)

    @property
    def eps_value(self) -> float:
        if self.eps is not None:
            return self.eps
        return amp.default_eps(self.initial.band_lo, self.initial.band_hi)

    @property
    def xi_values(self) -> tuple[float, ...]:
        if self.xi_grid is not None:
            return self.xi_grid
        return default_xi_grid(self.initial, self.potential)

    @property
    def amplitude(self) -> AmplitudeW:
        return AmplitudeW(self.potential, self.initial)

    def validate(self) -> None:
        try:
            check_delta1(self.delta1)
            check_delta2(self.delta2)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
        p1, p2 = self.initial.band_lo, self.initial.band_hi
        if not 0.0 < self.eps_value < 0.5 * (p2 - p1):
            raise ScenarioError(f"eps={self.eps_value} must lie in (0, (p2-p1)/2)")
        unknown = set(self.checks) - set(CHECKS)
        if unknown:
            raise ScenarioError(f"unknown checks {sorted(unknown)}; choose from {CHECKS}")
        if not self.tol > 0 or not self.s2_tol > 0:
            raise ScenarioError("tolerances must be positive")
        if any(t <= 0 for t in self.t_grid + self.slope_t_grid + self.outside_t_grid):
            raise ScenarioError("time grids must be positive")
        if self.suite_cases < 0:
            raise ScenarioError("suite_cases must be non-negative")
        if self.checks & set(S2_CHECKS):
            try:
                check_s2_hypotheses(self.amplitude)
            except ValueError as exc:
                raise ScenarioError(f"s2 checks: {exc}") from exc
        if "thm69" in self.checks and not self.potential.is_zero():
            try:
                amp.tilde_v(self.potential)
            except ValueError as exc:
                raise ScenarioError(f"thm69: {exc}") from exc


# ---- rows ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundRow:
    check: str
    case: int
    detail: str
    lhs: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    r2: float
    n_used: int
    t_min: float
    t_max: float
    ok: bool
    reason: str = ""


def fit_decay_slope(ts, amps, floor: float = AMPLITUDE_FLOOR, min_points: int = 5,
                    min_decades: float = 2.0) -> SlopeFit:
    """Least-squares slope of log|amp| against log t over the samples above ``floor``."""
    ts = np.asarray(ts, dtype=float)
    mags = np.abs(np.asarray(amps))
    keep = mags > floor
    used_t, used_a = ts[keep], mags[keep]
    if used_t.size == 0:
        return SlopeFit(math.nan, math.nan, 0, math.nan, math.nan, False, "all samples below floor")
    t_min, t_max = float(used_t.min()), float(used_t.max())
    if used_t.size < 2:
        return SlopeFit(math.nan, math.nan, 1, t_min, t_max, False, "one sample above floor")
    lt, la = np.log(used_t), np.log(used_a)
    slope, intercept = np.polyfit(lt, la, 1)
    resid = la - (slope * lt + intercept)
    spread = float(np.sum((la - la.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / spread if spread > 0 else 1.0
    reason = ""
    if used_t.size < min_points:
        reason = f"only {used_t.size} samples above floor"
    elif math.log10(t_max / t_min) < min_decades - 1e-9:
        reason = f"samples span {math.log10(t_max / t_min):.2f} decades"
    return SlopeFit(float(slope), r2, int(used_t.size), t_min, t_max, reason == "", reason)


@dataclass(frozen=True)
class ConeClassification:
    free_edges: tuple[float, float]
    shifted_edges: tuple[float, float]
    direction: str
    accelerating: bool
    decelerating: bool
    advanced: bool
    retarded: bool
    reflection: bool

    def flags(self) -> list[str]:
        names = ("accelerating", "decelerating", "advanced", "retarded", "reflection")
        return [n for n in names if getattr(self, n)]


def classify_cones(initial: BandFunction, potential: BandFunction) -> ConeClassification:
    """Compare the free cone with the potential-shifted cone in the packet's travel direction."""
    p1, p2 = initial.band_lo, initial.band_hi
    a, b = potential.band_lo, potential.band_hi
    free = (2.0 * p1, 2.0 * p2)
    shifted = (2.0 * (p1 + a), 2.0 * (p2 + b))
    if p1 > 0:
        direction = "right"
    elif p2 < 0:
        direction = "left"
        p1, p2, a, b = -p2, -p1, -b, -a
    else:
        return ConeClassification(free, shifted, "none", False, False, False, False, False)
    return ConeClassification(free, shifted, direction, accelerating=a > 0, decelerating=b < 0,
                              advanced=b > 0, retarded=a < 0 and p1 + a > 0,
                              reflection=p1 + a < 0)


# ---- randomized bound suites -------------------------------------------------------------------

def _log_uniform(rng, lo: float, hi: float) -> float:
    return float(10.0 ** rng.uniform(math.log10(lo), math.log10(hi)))


def phi_suite(n_cases: int, seed: int, quad_tol: float = 1e-10) -> list[BoundRow]:
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n_cases):
        n = int(rng.integers(1, 5))
        delta = float(rng.uniform(n / 2, (n + 1) / 2))
        while not n / 2 < delta < (n + 1) / 2:
            delta = float(rng.uniform(n / 2, (n + 1) / 2))
        s = float(5.0 - rng.uniform(0.0, 5.0))  # in (0, 5]
        cases.append((n, delta, s, _log_uniform(rng, 0.5, 1e4)))

    def run(item):
        k, (n, delta, s, omega) = item
        lhs, rhs, _ = check_phi_bound(n, delta, s, omega, quad_tol)
        return BoundRow("phi", k, f"n={n} delta={delta:.17g} s={s:.17g} omega={omega:.17g}",
                        lhs, rhs, lhs <= rhs + 10.0 * quad_tol)

    return parallel_map(run, enumerate(cases))


def random_band_function(rng, m_choices=(1, 2, 3)) -> BandFunction:
    m = int(rng.choice(m_choices))
    lo = float(rng.uniform(-5.0, 5.0))
    width = float(rng.uniform(0.5, 8.0))
    profile = CosBump(m=m, scale=float(rng.uniform(0.5, 2.0)), phase=float(rng.uniform(0, 2 * math.pi)))
    return BandFunction(profile, lo, lo + width, float(rng.uniform(-2.0, 2.0)))


def expansion_suite(n_cases: int, seed: int, delta1: float = 0.75,
                    delta2: float = 2.25) -> list[BoundRow]:
    """n_cases random cases for each of the one-term, two-term and packaged estimates."""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n_cases):
        U = random_band_function(rng)
        U4 = random_band_function(rng, (3,))
        omega = _log_uniform(rng, 1.0, 1e4)
        p0 = float(rng.uniform(U.band_lo - 3.0, U.band_hi + 3.0))
        p0_4 = float(rng.uniform(U4.band_lo - 3.0, U4.band_hi + 3.0))
        cases.append((U, U4, omega, p0, p0_4))

    def describe(U, omega, p0):
        prof = U.profile
        return (f"m={prof.m} band=[{U.band_lo:.17g},{U.band_hi:.17g}] x0={U.center:.17g}"
                f" omega={omega:.17g} p0={p0:.17g}")

    def run(item):
        k, (U, U4, omega, p0, p0_4) = item
        rows = []
        r = verify_one_term(U, omega, p0, delta1)
        rows.append(BoundRow("one_term", k, describe(U, omega, p0), abs(r.remainder), r.bound, r.passed))
        r = verify_two_term(U4, omega, p0_4, delta2)
        rows.append(BoundRow("two_term", k, describe(U4, omega, p0_4), abs(r.remainder), r.bound,
                             r.passed))
        inside = U.band_lo <= p0 <= U.band_hi
        modes = ["i", "ii"] if inside else ["i", "iii"]
        for mode in modes:
            r = verify_packaged(U, omega, p0, mode, delta1, delta2)
            rows.append(BoundRow(f"packaged_{mode}", k, describe(U, omega, p0), abs(r.remainder),
                                 r.bound, r.passed))
        if not U4.band_lo <= p0_4 <= U4.band_hi:
            r = verify_packaged(U4, omega, p0_4, "iv", delta1, delta2)
            rows.append(BoundRow("packaged_iv", k, describe(U4, omega, p0_4), abs(r.remainder),
                                 r.bound, r.passed))
        return rows

    return [row for rows in parallel_map(run, enumerate(cases)) for row in rows]


def tail_suite(n_cases: int, seed: int, tol: float = 1e-10) -> list[BoundRow]:
    """Random tail checks, then the c = 1 tail of cos^2 for widths 2, 4, 8, 16 (must decrease).

    Steeper bumps (m >= 2) put more mass in the transform and their c = 1 tail first
    grows from width 2 to 4, so the width sweep uses m = 1.
    """
    rng = np.random.default_rng(seed)
    cases = [(random_band_function(rng), float(rng.uniform(0.25, 5.0))) for _ in range(n_cases)]

    def run(item):
        k, (f, c) = item
        measured, bound, ok = verify_tail(f, c, tol)
        return BoundRow("tail", k, f"m={f.profile.m} band=[{f.band_lo:.17g},{f.band_hi:.17g}]"
                        f" x0={f.center:.17g} c={c:.17g}", measured, bound, ok)

    rows = parallel_map(run, enumerate(cases))
    previous = math.inf
    for k, width in enumerate((2.0, 4.0, 8.0, 16.0)):
        f = BandFunction(CosBump(m=1), 0.0, width, 0.0)
        measured, _, _ = verify_tail(f, 1.0, tol)
        rows.append(BoundRow("tail_width", k, f"m=1 width={width:g} c=1", measured, previous,
                             measured < previous))
        previous = measured
    return rows


# ---- space-time grid ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpacetimeSample:
    t: float
    x: float
    xi: float
    amp_s1: complex
    amp_s2: complex
    in_free_cone: bool
    in_shifted_cone: bool
    leading_s1: complex
    leading_s2: complex
    bound_s1: float
    bound_s2: float
    pass_s1: bool
    pass_s2: bool | None
    thm69_leading: complex | None = None
    thm69_bound: float | None = None
    thm69_pass: bool | None = None


def spacetime_samples(scenario: Scenario) -> list[SpacetimeSample]:
    u0, V = scenario.initial, scenario.potential
    do_s2 = "s2_cone" in scenario.checks
    do_69 = "thm69" in scenario.checks and not V.is_zero()
    tv = amp.tilde_v(V) if do_69 else None
    a, b = V.band_lo, V.band_hi
    p1, p2 = u0.band_lo, u0.band_hi
    eps = scenario.eps_value
    shifted = Cone(p1 + a, p2 + b)
    points = [(t, xi) for t in scenario.t_grid for xi in scenario.xi_values]

    def run(point):
        t, xi = point
        row1: ConeRow = verify_s1_cone(u0, [t], [xi], scenario.delta1, scenario.tol)[0]
        s2_value, lead2, bound2, pass2 = 0j, 0j, math.nan, None
        if do_s2:
            row2 = verify_s2_cone(scenario.amplitude, [t], [xi], scenario.delta1,
                                  scenario.delta2, scenario.s2_tol)[0]
            s2_value, lead2, bound2, pass2 = row2.value, row2.leading, row2.cone_bound, row2.passed
        lead69 = bound69 = pass69 = None
        if do_69 and shifted.contains_xi(xi) and amp.is_admissible(xi, a, b, p1, p2, eps):
            if not do_s2:
                s2_value = s2_result(scenario.amplitude, t, 2.0 * xi * t, scenario.s2_tol)[0]
            lead69 = s2_leading(amp.w1_eval(tv, u0, xi, 0.01 * scenario.s2_tol), t, 2.0 * xi * t)
            bound69 = amp.refined_s2_bound(tv, u0, t, scenario.delta1, eps,
                                             scenario.delta2)
            pass69 = abs(s2_value - lead69) <= bound69 + 10.0 * scenario.s2_tol
        return SpacetimeSample(t, row1.x, xi, row1.value, s2_value, row1.in_cone,
                               shifted.contains_xi(xi), row1.leading, lead2, row1.cone_bound,
                               bound2, row1.passed, pass2, lead69, bound69, pass69)

    return parallel_map(run, points)


def localization_share(samples: list[SpacetimeSample], u0: BandFunction) -> tuple[float, float]:
    """(largest t, share of sum |S1|^2 over the xi-grid lying in [p1, p2]) at that t."""
    t_last = max(s.t for s in samples)
    last = [s for s in samples if s.t == t_last]
    total = sum(abs(s.amp_s1) ** 2 for s in last)
    inside = sum(abs(s.amp_s1) ** 2 for s in last if u0.band_lo <= s.xi <= u0.band_hi)
    return t_last, (inside / total if total > 0 else 1.0)


# ---- decay slopes -----------------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeRow:
    kind: str
    xi: float
    fit: SlopeFit
    expected: str
    passed: bool


def _s1_along(u0: BandFunction, xi: float, ts, tol: float) -> list[complex]:
    return parallel_map(lambda t: s1_result(u0, t, 2.0 * xi * t, tol)[0], ts)


def _s2_along(W: AmplitudeW, xi: float, ts, tol: float) -> list[complex]:
    return parallel_map(lambda t: s2_result(W, t, 2.0 * xi * t, tol)[0], ts)


def decay_slopes(scenario: Scenario) -> tuple[list[SlopeRow], amp.PositivityReport | None]:
    u0 = scenario.initial
    rows = []
    xi_mid = u0.midpoint
    fit = fit_decay_slope(scenario.slope_t_grid, _s1_along(u0, xi_mid, scenario.slope_t_grid,
                                                           scenario.tol))
    rows.append(SlopeRow("s1_midpoint", xi_mid, fit, "[-0.55,-0.45]",
                         fit.ok and abs(fit.slope + 0.5) <= MIDPOINT_TOL))
    xi_out = u0.band_hi + 1.0
    fit = fit_decay_slope(scenario.outside_t_grid,
                          _s1_along(u0, xi_out, scenario.outside_t_grid, scenario.tol))
    limit = -scenario.delta1 + 0.05
    rows.append(SlopeRow("s1_outside", xi_out, fit, f"<={limit:.2f}",
                         fit.ok and fit.slope <= limit))
    report = None
    if "thm69" in scenario.checks and not scenario.potential.is_zero():
        tv = amp.tilde_v(scenario.potential)
        report = amp.positivity_intervals(tv, u0, scenario.eps_value)
        p_bar = report.best_direction()
        if p_bar is not None and report.nonempty:
            fit = fit_decay_slope(scenario.slope_t_grid,
                                  _s2_along(scenario.amplitude, p_bar, scenario.slope_t_grid,
                                            scenario.s2_tol))
            rows.append(SlopeRow("s2_direction", p_bar, fit, "[-0.57,-0.43]",
                                 fit.ok and abs(fit.slope + 0.5) <= S2_SLOPE_TOL))
        else:
            rows.append(SlopeRow("s2_direction", math.nan,
                                 SlopeFit(math.nan, math.nan, 0, math.nan, math.nan, False,
                                          "no certified positivity interval"),
                                 "[-0.57,-0.43]", False))
    return rows, report


# ---- whole runs -------------------------------------------------------------------------------

@dataclass
class VerifyResult:
    rows: list[BoundRow]

    @property
    def violations(self) -> list[BoundRow]:
        return [r for r in self.rows if not r.passed]


def run_verify(scenario: Scenario) -> VerifyResult:
    scenario.validate()
    rows: list[BoundRow] = []
    n, seed = scenario.suite_cases, scenario.seed
    if "phi" in scenario.checks:
        rows += phi_suite(n, seed)
    if "bounds4" in scenario.checks:
        rows += expansion_suite(n, seed + 1, scenario.delta1, scenario.delta2)
    if "tail" in scenario.checks:
        rows += tail_suite(max(1, n // 10) if n else 0, seed + 2)
    return VerifyResult(rows)


@dataclass
class PropagateResult:
    samples: list[SpacetimeSample]
    slopes: list[SlopeRow]
    checks: list[BoundRow]
    classification: ConeClassification
    positivity: amp.PositivityReport | None
    residual: ResidualTable | None

    @property
    def violations(self) -> list[str]:
        bad = []
        for s in self.samples:
            if not s.pass_s1:
                bad.append(f"s1 bound at t={s.t:g} xi={s.xi:g}")
            if s.pass_s2 is False:
                bad.append(f"s2 bound at t={s.t:g} xi={s.xi:g}")
            if s.thm69_pass is False:
                bad.append(f"thm69 bound at t={s.t:g} xi={s.xi:g}")
        bad += [f"slope {r.kind}: {r.fit.slope:.4g} ({r.fit.reason or r.expected})"
                for r in self.slopes if not r.passed]
        bad += [f"{r.check} {r.detail}" for r in self.checks if not r.passed]
        if self.residual is not None and not self.residual.slope_ok:
            bad.append(f"residual slope {self.residual.slope:.4g}")
        return bad


def run_propagate(scenario: Scenario) -> PropagateResult:
    scenario.validate()
    u0, V = scenario.initial, scenario.potential
    samples = spacetime_samples(scenario) if scenario.checks & {"s1_cone", "s2_cone", "thm69"} else []
    checks: list[BoundRow] = []
    slopes: list[SlopeRow] = []
    positivity = None
    if "s1_cone" in scenario.checks and samples:
        t_last, share = localization_share(samples, u0)
        checks.append(BoundRow("localization", 0, f"t={t_last:.17g} share of sum |S1|^2 in [p1,p2]",
                               share, LOCALIZATION_SHARE, share >= LOCALIZATION_SHARE))
    if scenario.checks & {"s1_cone", "thm69"}:
        slopes, positivity = decay_slopes(scenario)
        if "s1_cone" not in scenario.checks:
            slopes = [r for r in slopes if r.kind.startswith("s2")]
    if positivity is not None:
        for k, iv in enumerate(positivity.intervals):
            checks.append(BoundRow("positivity", k, f"interval=({iv.lo:.17g},{iv.hi:.17g})"
                                   f" arc={iv.arc:.17g}", iv.min_abs_w1, 0.0, iv.sampled_positive))
    if "s2_cone" in scenario.checks:
        bounds = parallel_map(lambda t: w_bound_rows(scenario.amplitude, [t], scenario.delta2)[0],
                              W_BOUND_TIMES)
        for k, (t, w, wb, dw, dwb) in enumerate(bounds):
            checks.append(BoundRow("w_sup", k, f"t={t:.17g}", w, wb, w <= wb))
            checks.append(BoundRow("w_deriv_sup", k, f"t={t:.17g}", dw, dwb, dw <= dwb))
    residual = None
    if "residual" in scenario.checks and not V.is_zero():
        grid = grid_for(u0, V, scenario.residual_t, scenario.solver_points, scenario.solver_dt)
        residual = dyson_residual(u0, V, grid, scenario.residual_t, scenario.epsilons)
    return PropagateResult(samples, slopes, checks, classify_cones(u0, V), positivity, residual)
