import math
from dataclasses import replace

import numpy as np
import pytest

from oscillax import cli
from oscillax.bands import BandFunction, CosBump
from oscillax.experiments import (Scenario, ScenarioError, classify_cones, default_xi_grid,
                                  fit_decay_slope, run_propagate)


def test_exact_power_law_slope():
    t = np.logspace(0, 3, 10)
    fit = fit_decay_slope(t, t**-0.5)
    assert fit.ok and abs(fit.slope + 0.5) < 1e-12 and fit.r2 == pytest.approx(1.0)


def test_slope_fit_preconditions():
    t = np.logspace(0, 3, 10)
    assert not fit_decay_slope(t, np.full(10, 1e-13)).ok
    assert math.isnan(fit_decay_slope(t, np.full(10, 1e-13)).slope)
    assert not fit_decay_slope(np.logspace(0, 1, 10), np.ones(10)).ok
    assert not fit_decay_slope(t[:4], t[:4] ** -1.0, min_decades=0.5).ok


def band(lo, hi):
    return BandFunction(CosBump(m=3), lo, hi)


def test_classify_symmetric_fast_packet():
    c = classify_cones(band(4, 6), band(-1, 1))
    assert c.flags() == ["advanced", "retarded"]
    assert c.free_edges == (8.0, 12.0) and c.shifted_edges == (6.0, 14.0)


def test_classify_reflection():
    c = classify_cones(band(0.5, 2), band(-1, 1))
    assert c.reflection and not c.retarded and c.advanced


def test_classify_acceleration_and_mirror():
    assert classify_cones(band(1, 2), band(0.5, 1)).accelerating
    left = classify_cones(band(-6, -4), band(-1, 1))
    assert left.direction == "left" and left.flags() == ["advanced", "retarded"]
    assert classify_cones(band(-1, 1), band(-1, 1)).flags() == []


def test_default_xi_grid(u0, potential):
    grid = default_xi_grid(u0, potential)
    assert len(grid) == 61 and grid[0] == 2.0 and grid[-1] == 8.0


def fixture_scenario(**kw):
    return replace(cli.load_scenario(None), **kw)


def test_validation_errors():
    with pytest.raises(ScenarioError):
        fixture_scenario(delta1=1.0).validate()
    with pytest.raises(ScenarioError):
        fixture_scenario(eps=1.5).validate()
    straddling = fixture_scenario(initial=band(-1, 1), checks=frozenset({"s2_cone"}))
    with pytest.raises(ScenarioError):
        straddling.validate()
    rough = fixture_scenario(initial=BandFunction(CosBump(m=2), 4, 6))
    with pytest.raises(ScenarioError):
        rough.validate()


def test_empty_checks_run_is_trivial():
    result = run_propagate(fixture_scenario(checks=frozenset()))
    assert result.samples == [] and result.slopes == [] and result.violations == []


def test_load_scenario_overrides(tmp_path):
    s = cli.load_scenario(None, ["params.delta1=0.8", "grids.t=1,2"], "s1_cone")
    assert s.delta1 == 0.8 and s.t_grid == (1.0, 2.0) and s.checks == {"s1_cone"}
    with pytest.raises(ScenarioError):
        cli.load_scenario(None, ["params.nope=1"])
    with pytest.raises(ScenarioError):
        cli.load_scenario(tmp_path / "missing.ini")
    with pytest.raises(ScenarioError):
        cli.load_scenario(None, checks="bogus")


def test_factor_zero_flag(tmp_path):
    text = cli.fixture_path().read_text().replace("power = 2\nroot = 0\n", "factor_zero = true\n")
    path = tmp_path / "s.ini"
    path.write_text(text)
    s = cli.load_scenario(path)
    assert s.potential.profile.power == 1 and s.potential.profile.root == 0.0


def test_constants_command(capsys):
    assert cli.main(["constants", "--format=csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "name,value" and len(lines) == 14
    values = dict(line.split(",") for line in lines[1:])
    assert float(values["c3"]) == pytest.approx(float(values["c3_tilde"]) / (2 * math.sqrt(math.pi)))


def test_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert cli.main(["verify", "--out", out, "--set", "delta1=1.0"]) == 2
    assert cli.main(["verify", "--scenario", str(tmp_path / "no.ini"), "--out", out]) == 2
    assert cli.main(["constants", "--set", "eps=5"]) == 2
    assert cli.main(["bogus"]) == 2


def test_verify_small_run_and_overwrite_guard(tmp_path, capsys):
    out = str(tmp_path / "v")
    args = ["verify", "--out", out, "--set", "suite_cases=3", "--checks", "phi"]
    assert cli.main(args) == 0
    text = (tmp_path / "v" / "bounds.csv").read_text()
    assert text.splitlines()[0] == "check,case,detail,lhs,bound,pass"
    assert len(text.splitlines()) == 4
    assert cli.main(args) == 2
    assert cli.main(args + ["--force"]) == 0


def test_zero_potential_has_zero_s2_columns(tmp_path, capsys):
    path = tmp_path / "free.ini"
    path.write_text(cli.fixture_path().read_text().replace(
        "[potential]\nprofile = cos_bump", "[potential]\nprofile = zero"))
    out = tmp_path / "p"
    code = cli.main(["propagate", "--scenario", str(path), "--out", str(out), "--checks",
                     "s1_cone,s2_cone", "--set", "grids.t=1,10", "--set", "grids.xi=3,5,7",
                     "--set", "grids.slope_t=100,1000,10000,31623,100000"])
    lines = (out / "spacetime.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header == cli.SPACETIME_HEADER
    for line in lines[1:]:
        row = dict(zip(header, line.split(",")))
        assert float(row["s2_re"]) == 0 and float(row["s2_im"]) == 0
    assert code == 0
