"""Command-line frontend: oscillax verify | propagate | constants."""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import amplitude as amp
from .bands import BandFunction, CosBump, ZeroProfile
from .dyson import c_constants, m_constants
from .expansion import (cor_c1, cor_c2, cor_c3, erdelyi_c1, erdelyi_c2, tilde_c1, tilde_c2)
from .experiments import (CHECKS, PROPAGATE_CHECKS, VERIFY_CHECKS, PropagateResult, Scenario,
                          ScenarioError, default_outside_grid, default_slope_grid, run_propagate,
                          run_verify)
from .quad import QuadratureError

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_QUADRATURE = 0, 1, 2, 3
FIXTURE = "symmetric-real-potential.ini"

BOUNDS_HEADER = ["check", "case", "detail", "lhs", "bound", "pass"]
SPACETIME_HEADER = ["t", "x", "xi", "s1_re", "s1_im", "s2_re", "s2_im", "in_free_cone",
                    "in_shifted_cone", "leading_s1_re", "leading_s1_im", "leading_s2_re",
                    "leading_s2_im", "bound_s1", "bound_s2", "pass_s1", "pass_s2",
                    "thm69_leading_re", "thm69_leading_im", "thm69_bound", "thm69_pass"]
SLOPES_HEADER = ["kind", "xi", "t_min", "t_max", "n_used", "slope", "r2", "expected", "pass",
                 "note"]
RESIDUAL_HEADER = ["t", "epsilon", "residual", "eps_s2_sup", "solution_sup", "slope",
                   "free_error", "pass"]
CONSTANTS_HEADER = ["name", "value"]

BAND_KEYS = {"profile", "m", "power", "root", "scale", "phase", "band_lo", "band_hi", "center",
             "factor_zero"}
PARAM_KEYS = {"name", "delta1", "delta2", "eps", "tol", "s2_tol", "seed", "suite_cases"}
GRID_KEYS = {"t", "xi", "slope_t", "outside_t", "solver_points", "solver_dt", "residual_t",
             "epsilons"}
SECTIONS = {"initial": BAND_KEYS, "potential": BAND_KEYS, "params": PARAM_KEYS,
            "grids": GRID_KEYS, "checks": {"enabled"}}


# ---- scenario loading --------------------------------------------------------------------------

def fixture_path() -> Path:
    return Path(str(resources.files("oscillax") / "scenarios" / FIXTURE))


def _number(section: str, key: str, raw: str, kind=float):
    try:
        return kind(raw)
    except ValueError as exc:
        raise ScenarioError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _floats(section: str, key: str, raw: str) -> tuple[float, ...]:
    parts = [p for p in raw.replace(",", " ").split() if p]
    if not parts:
        raise ScenarioError(f"[{section}] {key}: empty list")
    return tuple(_number(section, key, p) for p in parts)


def _flag(section: str, key: str, raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ScenarioError(f"[{section}] {key}: expected a boolean, got {raw!r}")


def _band(section: str, values: dict[str, str]) -> BandFunction:
    for key in ("band_lo", "band_hi"):
        if key not in values:
            raise ScenarioError(f"[{section}] missing {key}")
    lo = _number(section, "band_lo", values["band_lo"])
    hi = _number(section, "band_hi", values["band_hi"])
    center = _number(section, "center", values.get("center", "0"))
    name = values.get("profile", "cos_bump").strip()
    if name == "zero":
        profile = ZeroProfile()
    elif name == "cos_bump":
        power = _number(section, "power", values.get("power", "0"), int)
        root = _number(section, "root", values.get("root", "0"))
        if _flag(section, "factor_zero", values.get("factor_zero", "false")):
            # place the polynomial zero where the band map sends p = 0
            root = -(lo + hi) / (hi - lo)
            power = max(power, 1)
        try:
            profile = CosBump(m=_number(section, "m", values.get("m", "3"), int), power=power,
                              root=root, scale=_number(section, "scale", values.get("scale", "1")),
                              phase=_number(section, "phase", values.get("phase", "0")))
        except ValueError as exc:
            raise ScenarioError(f"[{section}] {exc}") from exc
    else:
        raise ScenarioError(f"[{section}] unknown profile {name!r}; use cos_bump or zero")
    try:
        return BandFunction(profile, lo, hi, center)
    except ValueError as exc:
        raise ScenarioError(f"[{section}] {exc}") from exc


def _apply_override(parser: configparser.ConfigParser, item: str) -> None:
    if "=" not in item:
        raise ScenarioError(f"--set expects key=value, got {item!r}")
    key, value = (s.strip() for s in item.split("=", 1))
    section, _, option = key.rpartition(".")
    section = section or "params"
    if section not in SECTIONS:
        raise ScenarioError(f"--set: unknown section {section!r}")
    if not parser.has_section(section):
        parser.add_section(section)
    parser.set(section, option, value)


def load_scenario(path: str | os.PathLike | None, overrides=(), checks: str | None = None) -> Scenario:
    """Parse a scenario file, apply section.key=value overrides and an optional check filter."""
    path = Path(path) if path is not None else fixture_path()
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from exc
    for item in overrides:
        _apply_override(parser, item)
    for section in parser.sections():
        if section not in SECTIONS:
            raise ScenarioError(f"unknown section [{section}]")
        unknown = set(parser[section]) - SECTIONS[section]
        if unknown:
            raise ScenarioError(f"[{section}] unknown keys {sorted(unknown)}")
    for section in ("initial", "potential"):
        if not parser.has_section(section):
            raise ScenarioError(f"missing section [{section}]")
    params = dict(parser["params"]) if parser.has_section("params") else {}
    grids = dict(parser["grids"]) if parser.has_section("grids") else {}
    enabled = parser.get("checks", "enabled", fallback=",".join(CHECKS))
    if checks is not None:
        enabled = checks
    check_set = frozenset(c.strip() for c in enabled.split(",") if c.strip())
    unknown = check_set - set(CHECKS)
    if unknown:
        raise ScenarioError(f"unknown checks {sorted(unknown)}; choose from {CHECKS}")

    kwargs = {"name": params.get("name", path.stem), "initial": _band("initial", parser["initial"]),
              "potential": _band("potential", parser["potential"]), "checks": check_set}
    for key in ("delta1", "delta2", "tol", "s2_tol"):
        if key in params:
            kwargs[key] = _number("params", key, params[key])
    if params.get("eps", "auto").strip() != "auto":
        kwargs["eps"] = _number("params", "eps", params["eps"])
    for key in ("seed", "suite_cases"):
        if key in params:
            kwargs[key] = _number("params", key, params[key], int)
    if "t" in grids:
        kwargs["t_grid"] = _floats("grids", "t", grids["t"])
    if grids.get("xi", "auto").strip() != "auto":
        kwargs["xi_grid"] = _floats("grids", "xi", grids["xi"])
    kwargs["slope_t_grid"] = (default_slope_grid() if grids.get("slope_t", "auto").strip() == "auto"
                              else _floats("grids", "slope_t", grids["slope_t"]))
    kwargs["outside_t_grid"] = (default_outside_grid()
                                if grids.get("outside_t", "auto").strip() == "auto"
                                else _floats("grids", "outside_t", grids["outside_t"]))
    if "solver_points" in grids:
        kwargs["solver_points"] = _number("grids", "solver_points", grids["solver_points"], int)
    for key, field_name in (("solver_dt", "solver_dt"), ("residual_t", "residual_t")):
        if key in grids:
            kwargs[field_name] = _number("grids", key, grids[key])
    if "epsilons" in grids:
        kwargs["epsilons"] = _floats("grids", "epsilons", grids["epsilons"])
    return Scenario(**kwargs)


# ---- CSV output -------------------------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "" if math.isnan(value) else "%.17g" % value
    return str(value)


def _re_im(z) -> list[str]:
    if z is None:
        return ["", ""]
    z = complex(z)
    return [fmt(z.real), fmt(z.imag)]


def render_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _prepare_out(out_dir: Path, names: list[str], force: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    existing = [n for n in names if (out_dir / n).exists()]
    if existing and not force:
        raise ScenarioError(f"refusing to overwrite {', '.join(existing)} in {out_dir}; use --force")


def bound_rows(rows) -> list[list]:
    return [[r.check, r.case, r.detail, r.lhs, r.bound, r.passed] for r in rows]


def spacetime_rows(result: PropagateResult) -> list[list]:
    out = []
    for s in result.samples:
        out.append([s.t, s.x, s.xi, *_re_im(s.amp_s1), *_re_im(s.amp_s2), s.in_free_cone,
                    s.in_shifted_cone, *_re_im(s.leading_s1), *_re_im(s.leading_s2), s.bound_s1,
                    s.bound_s2, s.pass_s1, s.pass_s2, *_re_im(s.thm69_leading), s.thm69_bound,
                    s.thm69_pass])
    return out


def slope_rows(result: PropagateResult) -> list[list]:
    return [[r.kind, r.xi, r.fit.t_min, r.fit.t_max, r.fit.n_used, r.fit.slope, r.fit.r2,
             r.expected, r.passed, r.fit.reason] for r in result.slopes]


def residual_rows(result: PropagateResult) -> list[list]:
    table = result.residual
    if table is None:
        return []
    return [[table.t, r.epsilon, r.residual, r.s2_sup, r.solution_sup, table.slope,
             table.free_error, table.slope_ok] for r in table.rows]


def summary_text(scenario: Scenario, result: PropagateResult) -> str:
    c = result.classification
    u0, V = scenario.initial, scenario.potential
    lines = [f"scenario: {scenario.name}",
             f"checks: {','.join(sorted(scenario.checks))}",
             f"initial band: [{fmt(u0.band_lo)}, {fmt(u0.band_hi)}]",
             f"potential band: [{fmt(V.band_lo)}, {fmt(V.band_hi)}]",
             f"free cone speeds: [{fmt(c.free_edges[0])}, {fmt(c.free_edges[1])}]",
             f"shifted cone speeds: [{fmt(c.shifted_edges[0])}, {fmt(c.shifted_edges[1])}]",
             f"travel direction: {c.direction}",
             f"interpretation flags: {','.join(c.flags()) or 'none'}"]
    if result.positivity is not None:
        rep = result.positivity
        lines.append(f"positivity geometry: {'ok' if rep.geometry_ok else 'fails'}")
        lines.append(f"positivity sign hypothesis (Re, Im nonvanishing): "
                     f"{'holds' if rep.literal_sign_hypothesis else 'fails'}")
        for iv in rep.intervals:
            lines.append(f"positivity interval: ({fmt(iv.lo)}, {fmt(iv.hi)}) arc={fmt(iv.arc)}"
                         f" min|W1|={fmt(iv.min_abs_w1)} best_p={fmt(iv.best_p)}"
                         f" certified={fmt(iv.sampled_positive)}")
        lines += [f"note: {m}" for m in rep.messages]
    if result.residual is not None:
        lines.append("residual slope in epsilon is a desk-scale convergence proxy")
    n_checked = (len(result.samples) + len(result.slopes) + len(result.checks)
                 + (1 if result.residual is not None else 0))
    bad = result.violations
    lines.append(f"checked: {n_checked}")
    lines.append(f"violations: {len(bad)}")
    lines += [f"violation: {b}" for b in bad]
    lines.append(f"status: {'FAIL' if bad else 'PASS'}")
    return "\n".join(lines) + "\n"


def constants_table(scenario: Scenario) -> list[tuple[str, float]]:
    d1, d2, eps = scenario.delta1, scenario.delta2, scenario.eps_value
    p1, p2 = scenario.initial.band_lo, scenario.initial.band_hi
    a, b = scenario.potential.band_lo, scenario.potential.band_hi
    m1, m2 = m_constants(a, b, d2)
    c1, c2 = c_constants(d1, a, b, p1, p2, d2)
    c3t, c3 = amp.c3_constants(a, b, p1, p2, eps)
    return [("erdelyi_c1", erdelyi_c1(d1)), ("erdelyi_c2", erdelyi_c2(d2)),
            ("cor_c1", cor_c1(d1, p1, p2)), ("cor_c2", cor_c2(d1, p1, p2)),
            ("cor_c3", cor_c3(d2, p1, p2)), ("tilde_c1", tilde_c1(d1, p1, p2)),
            ("tilde_c2", tilde_c2(d1, p1, p2)), ("M1", m1), ("M2", m2), ("c1", c1), ("c2", c2),
            ("c3_tilde", c3t), ("c3", c3)]


# ---- commands ---------------------------------------------------------------------------------

def _restrict(scenario: Scenario, allowed) -> Scenario:
    return replace(scenario, checks=frozenset(scenario.checks & set(allowed)))


def cmd_verify(args) -> int:
    scenario = _restrict(load_scenario(args.scenario, args.set, args.checks), VERIFY_CHECKS)
    scenario.validate()
    out = Path(args.out)
    _prepare_out(out, ["bounds.csv"], args.force)
    result = run_verify(scenario)
    write_atomic(out / "bounds.csv", render_csv(BOUNDS_HEADER, bound_rows(result.rows)))
    counts: dict[str, list[int]] = {}
    for r in result.rows:
        tally = counts.setdefault(r.check, [0, 0])
        tally[0] += 1
        tally[1] += not r.passed
    for check, (n, bad) in counts.items():
        print(f"{check}: {n} cases, {bad} violations")
    print(f"status: {'FAIL' if result.violations else 'PASS'}")
    return EXIT_VIOLATION if result.violations else EXIT_OK


def cmd_propagate(args) -> int:
    scenario = _restrict(load_scenario(args.scenario, args.set, args.checks), PROPAGATE_CHECKS)
    scenario.validate()
    out = Path(args.out)
    names = ["spacetime.csv", "slopes.csv", "checks.csv", "residual.csv", "summary.txt"]
    _prepare_out(out, names, args.force)
    result = run_propagate(scenario)
    files = {"spacetime.csv": render_csv(SPACETIME_HEADER, spacetime_rows(result)),
             "slopes.csv": render_csv(SLOPES_HEADER, slope_rows(result)),
             "checks.csv": render_csv(BOUNDS_HEADER, bound_rows(result.checks)),
             "residual.csv": render_csv(RESIDUAL_HEADER, residual_rows(result)),
             "summary.txt": summary_text(scenario, result)}
    for name in names:
        write_atomic(out / name, files[name])
    sys.stdout.write(files["summary.txt"])
    return EXIT_VIOLATION if result.violations else EXIT_OK


def cmd_constants(args) -> int:
    scenario = load_scenario(args.scenario, args.set)
    scenario = replace(scenario, checks=frozenset())
    scenario.validate()
    table = constants_table(scenario)
    if args.format == "csv":
        sys.stdout.write(render_csv(CONSTANTS_HEADER, [[n, v] for n, v in table]))
    else:
        width = max(len(n) for n, _ in table)
        for name, value in table:
            print(f"{name:<{width}}  {fmt(value)}")
    if args.out:
        out = Path(args.out)
        _prepare_out(out, ["constants.csv"], args.force)
        write_atomic(out / "constants.csv",
                     render_csv(CONSTANTS_HEADER, [[n, v] for n, v in table]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oscillax")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify", "propagate", "constants"):
        p = sub.add_parser(name)
        p.add_argument("--scenario", default=None,
                       help="scenario file (default: packaged symmetric-real-potential)")
        p.add_argument("--out", default=None if name == "constants" else "out",
                       help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override, e.g. params.delta1=0.8 or grids.t=1,10")
        p.add_argument("--checks", default=None, help="comma-separated subset of checks")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--format", choices=("table", "csv"), default="table")
    return parser


COMMANDS = {"verify": cmd_verify, "propagate": cmd_propagate, "constants": cmd_constants}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE


if __name__ == "__main__":
    sys.exit(main())
