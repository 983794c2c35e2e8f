"""Acceptance suite: one test per criterion, each with its runtime limit."""

import filecmp
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from oscillax import amplitude as amp
from oscillax import cli
from oscillax.dyson import verify_s1_cone, verify_s2_cone, w_bound_rows, w_eval
from oscillax.experiments import decay_slopes, expansion_suite, phi_suite, tail_suite
from oscillax.phase import phi_n, phi_n_at_zero
from oscillax.solver import dyson_residual, grid_for

SEED = 20240101


@pytest.fixture(scope="module")
def scenario():
    return cli.load_scenario(None)


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_c01_phi_closed_form_at_zero(record):
    with Clock() as clock:
        worst = max(abs(phi_n(n, 0.0, om, 1e-12) - phi_n_at_zero(n, om))
                    for n in (1, 2, 3, 4) for om in (0.5, 1.0, 10.0, 100.0))
    ok = worst <= 1e-8 and clock.seconds < 5
    record(1, ok, f"max |phi_n(0) - closed form| = {worst:.3g} (<= 1e-8), {clock.seconds:.1f}s (< 5s)")
    assert ok


def test_c02_phi_bound_random(record):
    with Clock() as clock:
        rows = phi_suite(1000, SEED)
    bad = sum(not r.passed for r in rows)
    ok = bad == 0 and len(rows) == 1000 and clock.seconds < 60
    ratio = max(r.lhs / r.bound for r in rows)
    record(2, ok, f"{bad} violations / {len(rows)} cases, max lhs/bound = {ratio:.3f},"
                  f" {clock.seconds:.1f}s (< 60s)")
    assert ok


def test_c03_expansion_bounds_random(record):
    with Clock() as clock:
        rows = expansion_suite(1000, SEED + 1)
    counts = {}
    for r in rows:
        n, bad = counts.get(r.check, (0, 0))
        counts[r.check] = (n + 1, bad + (not r.passed))
    bad = sum(b for _, b in counts.values())
    ok = (bad == 0 and counts["one_term"][0] == 1000 and counts["two_term"][0] == 1000
          and counts["packaged_i"][0] == 1000 and clock.seconds < 600)
    detail = ", ".join(f"{k} {n}/{b}" for k, (n, b) in sorted(counts.items()))
    record(3, ok, f"{bad} violations (cases/violations: {detail}), {clock.seconds:.1f}s (< 600s)")
    assert ok


def test_c04_chebyshev_tail(record):
    with Clock() as clock:
        rows = tail_suite(100, SEED + 2)
    random_rows = [r for r in rows if r.check == "tail"]
    width_rows = [r for r in rows if r.check == "tail_width"]
    bad = sum(not r.passed for r in random_rows)
    monotone = all(r.passed for r in width_rows)
    ok = bad == 0 and len(random_rows) == 100 and monotone and clock.seconds < 60
    tails = " > ".join(f"{r.lhs:.3g}" for r in width_rows)
    record(4, ok, f"{bad} violations / 100, c=1 tails for widths 2,4,8,16: {tails},"
                  f" {clock.seconds:.1f}s (< 60s)")
    assert ok


def test_c05_s1_decay_slopes(scenario, record):
    with Clock() as clock:
        rows, _ = decay_slopes(replace(scenario, checks=frozenset({"s1_cone"})))
    by_kind = {r.kind: r for r in rows}
    mid, out = by_kind["s1_midpoint"].fit, by_kind["s1_outside"].fit
    ok = (mid.ok and abs(mid.slope + 0.5) <= 0.05 and mid.t_min == 100.0 and mid.t_max == 1e4
          and out.ok and out.slope <= -0.70 and clock.seconds < 120)
    record(5, ok, f"midpoint slope {mid.slope:.4f} on [1e2,1e4] (-0.5 +- 0.05); outside slope"
                  f" {out.slope:.3f} on [{out.t_min:.3g},{out.t_max:.3g}] above the 1e-12 floor"
                  f" (<= -0.70), {clock.seconds:.1f}s (< 120s)")
    assert ok


def test_c06_s1_cone_expansion(scenario, record):
    with Clock() as clock:
        rows = verify_s1_cone(scenario.initial, scenario.t_grid, scenario.xi_values,
                              scenario.delta1, scenario.tol)
    inside = [r for r in rows if r.in_cone]
    bad = sum(not r.passed for r in rows)
    worst = max(r.cone_lhs / r.cone_bound for r in inside)
    ok = bad == 0 and inside and clock.seconds < 120
    record(6, ok, f"{bad} violations over {len(rows)} (t, xi) points ({len(inside)} in cone),"
                  f" max |S1 - leading| / bound = {worst:.3g}, {clock.seconds:.1f}s (< 120s)")
    assert ok


def test_c07_w_bounds(scenario, record):
    with Clock() as clock:
        rows = w_bound_rows(scenario.amplitude, [0.5, 1.0, 10.0, 100.0, 1000.0], scenario.delta2)
    ok = all(w <= wb and dw <= dwb for _, w, wb, dw, dwb in rows) and clock.seconds < 300
    worst = max(max(w / wb, dw / dwb) for _, w, wb, dw, dwb in rows)
    record(7, ok, f"|W| and |dW/dp| below M1/M2 bounds at 5 times, max ratio {worst:.3g},"
                  f" {clock.seconds:.1f}s (< 300s)")
    assert ok


def test_c08_s2_cone_estimates(scenario, record):
    ts, xis = scenario.t_grid, scenario.xi_values
    with Clock() as clock:
        rows = verify_s2_cone(scenario.amplitude, ts, xis, scenario.delta1, scenario.delta2,
                              scenario.s2_tol)
    bad = sum(not r.passed for r in rows)
    ok = bad == 0 and len(rows) <= 500 and clock.seconds < 600
    record(8, ok, f"{bad} violations over {len(rows)} grid points (<= 500),"
                  f" {clock.seconds:.1f}s (< 600s)")
    assert ok


def test_c09_decomposition_identity(scenario, u0, potential, amplitude_w, record):
    rng = np.random.default_rng(SEED + 3)
    tv = amp.tilde_v(potential)
    pieces = amp.admissible_region(potential.band_lo, potential.band_hi, u0.band_lo,
                                   u0.band_hi, scenario.eps_value)
    lengths = np.array([h - l for l, h in pieces])
    tol_w, tol_1, tol_2 = 1e-12, 1e-13, 1e-13
    allowed = 10.0 * (tol_w + tol_1 + tol_2)
    worst = 0.0
    with Clock() as clock:
        for _ in range(100):
            k = rng.choice(len(pieces), p=lengths / lengths.sum())
            p = float(rng.uniform(*pieces[k]))
            t = float(rng.uniform(0.5, 50.0))
            w = w_eval(amplitude_w, t, p, tol=tol_w)
            rebuilt = amp.w1_eval(tv, u0, p, tol_1) + amp.w2_eval(tv, u0, t, p, tol_2) / t
            worst = max(worst, abs(w - rebuilt))
    ok = worst <= allowed and clock.seconds < 180
    record(9, ok, f"max |W - W1 - W2/t| = {worst:.3g} over 100 points (<= {allowed:.2g}),"
                  f" {clock.seconds:.1f}s (< 180s)")
    assert ok


def test_c10_s2_decay_along_positivity_direction(scenario, record):
    with Clock() as clock:
        rows, report = decay_slopes(replace(scenario, checks=frozenset({"thm69"})))
    s2 = next(r for r in rows if r.kind == "s2_direction")
    positive = report.nonempty and all(iv.min_abs_w1 > 0 for iv in report.intervals)
    ok = (positive and s2.fit.ok and abs(s2.fit.slope + 0.5) <= 0.07 and s2.fit.t_min == 100.0
          and s2.fit.t_max == 1e4 and clock.seconds < 300)
    intervals = ", ".join(f"({iv.lo:g},{iv.hi:g})" for iv in report.intervals)
    record(10, ok, f"|S2| slope {s2.fit.slope:.4f} at p = {s2.xi:.4f} (-0.5 +- 0.07); positivity"
                   f" intervals {intervals} with sampled |W1| > 0, {clock.seconds:.1f}s (< 300s)")
    assert ok


def test_c11_reference_solver_residual(scenario, record):
    u0, V = scenario.initial, scenario.potential
    with Clock() as clock:
        grid = grid_for(u0, V, 1.0, 1 << 14, 1e-3)
        table = dyson_residual(u0, V, grid, 1.0, (0.0125, 0.025, 0.05, 0.1))
    ok = (table.slope_ok and table.free_error <= 1e-6 and grid.n_points == 1 << 14
          and clock.seconds < 300)
    record(11, ok, f"residual slope in eps {table.slope:.4f} ([1.7, 2.3]), free solver vs S1"
                   f" {table.free_error:.3g} (<= 1e-6), {clock.seconds:.1f}s (< 300s)")
    assert ok


def test_c12_propagate_is_deterministic(tmp_path, monkeypatch, record, capsys):
    outs = [tmp_path / "run1", tmp_path / "run2"]
    codes = []
    for out, threads in zip(outs, ("1", "4")):
        monkeypatch.setenv("OSCILLAX_THREADS", threads)
        codes.append(cli.main(["propagate", "--out", str(out)]))
    capsys.readouterr()
    names = sorted(p.name for p in outs[0].iterdir())
    match, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
    ok = codes == [0, 0] and not mismatch and not errors and len(match) == 5
    record(12, ok, f"{len(match)} files byte-identical across two propagate runs"
                   f" (1 and 4 threads), exit codes {codes}")
    assert ok
