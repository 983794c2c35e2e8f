import math

import numpy as np
import pytest

from oscillax import amplitude as amp
from oscillax.bands import BandFunction, CosBump, ZeroProfile
from oscillax.dyson import (AmplitudeW, Cone, Direction, c_constants, m_constants, s1_eval,
                            s1_leading, s2_result, verify_s1_cone, verify_s2_cone, w_deriv_p,
                            w_eval, w_values)

# mpmath references from tests/oracle_mp.py
S1_10_100 = 0.043915280063908407586 - 0.06735897634666761011j
S1_2_M3 = -2.7342768258804141134e-6 + 1.0179361821131647287e-6j
W_1_5 = 0.04591402366205862646 - 0.040020425976319419864j
W_10_35 = -2.2528580642300611762e-6 - 2.2528456427787575244e-6j
W1_35 = -2.2528395422173959798e-6 - 2.2528395422173959798e-6j
W1_65 = 1.426821080791754562e-6 + 1.426821080791754562e-6j


def test_s1_matches_reference(u0):
    assert abs(s1_eval(u0, 10.0, 100.0, 1e-13) - S1_10_100) < 1e-12
    assert abs(s1_eval(u0, 2.0, -3.0, 1e-14) - S1_2_M3) < 1e-13


def test_s1_leading_inside_cone(u0):
    def rel(t):
        x = 2 * 5.0 * t
        return abs(s1_eval(u0, t, x) - s1_leading(u0, t, x)) / abs(s1_leading(u0, t, x))

    assert rel(1e3) < 1e-2
    assert rel(1e4) < 0.2 * rel(1e3)


def test_w_matches_reference(amplitude_w):
    assert abs(w_eval(amplitude_w, 1.0, 5.0, tol=1e-13) - W_1_5) < 1e-12
    assert abs(w_eval(amplitude_w, 10.0, 3.5, tol=1e-15) - W_10_35) < 1e-14


def test_w_routes_agree(amplitude_w):
    for t, p in ((0.5, 4.2), (3.0, 5.5), (20.0, 6.7)):
        fubini = w_eval(amplitude_w, t, p, tol=1e-12)
        iterated = w_eval(amplitude_w, t, p, method="iterated", tol=1e-12)
        assert abs(fubini - iterated) < 1e-10


def test_w_derivative(amplitude_w):
    t, p, h = 2.0, 5.3, 1e-5
    fd = (w_eval(amplitude_w, t, p + h, tol=1e-14) - w_eval(amplitude_w, t, p - h, tol=1e-14)) / (2 * h)
    assert abs(w_deriv_p(amplitude_w, t, p, 1e-13) - fd) < 1e-7


def test_w_vanishes_at_zero_time_and_outside_support(amplitude_w):
    assert w_eval(amplitude_w, 0.0, 5.0) == 0
    assert np.all(w_values(amplitude_w, 1.0, np.array([2.5, 7.5])) == 0)


def test_zero_potential_gives_zero_s2(u0):
    W = AmplitudeW(BandFunction(ZeroProfile(), -1.0, 1.0), u0)
    assert s2_result(W, 5.0, 50.0)[0] == 0


def test_s2_routes_agree(amplitude_w):
    for t, x in ((1.0, 10.0), (30.0, 2 * 6.5 * 30.0)):
        direct = s2_result(amplitude_w, t, x, 1e-11, method="direct")[0]
        split = s2_result(amplitude_w, t, x, 1e-11, method="split")[0]
        assert abs(direct - split) < 1e-10


def test_w1_matches_reference(u0, potential):
    tv = amp.tilde_v(potential)
    assert abs(amp.w1_eval(tv, u0, 3.5, 1e-15) - W1_35) < 1e-15
    assert abs(amp.w1_eval(tv, u0, 6.5, 1e-15) - W1_65) < 1e-15


def test_w_splits_into_time_independent_part(u0, potential, amplitude_w):
    tv = amp.tilde_v(potential)
    for t, p in ((0.5, 3.4), (5.0, 6.2), (40.0, 4.9)):
        w = w_eval(amplitude_w, t, p, tol=1e-13)
        rebuilt = amp.w1_eval(tv, u0, p, 1e-14) + amp.w2_eval(tv, u0, t, p, 1e-14) / t
        assert abs(w - rebuilt) < 1e-11


def test_tilde_v_reduction(potential):
    tv = amp.tilde_v(potential)
    y = np.array([-0.7, 0.3, 0.9])
    from oscillax.bands import fourier_eval
    assert np.allclose(tv.eval(y), fourier_eval(potential, y) / y, atol=1e-14)
    assert abs(tv.eval(0.0)) < 1e-14  # double zero leaves a simple zero


def test_tilde_v_needs_explicit_factor():
    V = BandFunction(CosBump(m=3), -1.0, 1.0)
    with pytest.raises(ValueError):
        amp.tilde_v(V)
    # a band away from 0 needs no factor
    assert amp.tilde_v(BandFunction(CosBump(m=3), 0.5, 1.0)).factored is None


def test_constants_relations():
    m1, m2 = m_constants(-1.0, 1.0)
    assert m2 > m1 > 2.0
    _, c3 = amp.c3_constants(-1.0, 1.0, 4.0, 6.0, 0.25)
    c3t, _ = amp.c3_constants(-1.0, 1.0, 4.0, 6.0, 0.25)
    assert c3 == pytest.approx(c3t / (2 * math.sqrt(math.pi)))
    c1, c2 = c_constants(0.75, -1.0, 1.0, 4.0, 6.0)
    assert c1 > c2 > 0


def test_admissible_region(u0, potential):
    eps = amp.default_eps(4.0, 6.0)
    assert eps == 0.25
    # the whole shifted band [3, 7] is admissible when the strip around [a/2, b/2] is far away
    assert amp.admissible_region(-1, 1, 4, 6, eps) == [(3.0, 7.0)]
    assert amp.is_admissible(5.0, -1, 1, 4, 6, eps)
    assert not amp.is_admissible(7.5, -1, 1, 4, 6, eps)
    # a slow packet: the strip [-0.75, 0.75] cuts the shifted band [-0.5, 3]
    assert amp.admissible_region(-1, 1, 0.5, 2, eps) == [(0.75, 3.0)]
    assert not amp.is_admissible(0.6, -1, 1, 0.5, 2, eps)


def test_cones_and_directions():
    cone = Cone(4.0, 6.0)
    assert cone.contains_xi(5.0) and not cone.contains_xi(6.5)
    d = Direction(5.0)
    assert d.x_at(3.0) == 30.0


def test_fixture_cone_checks(u0, amplitude_w):
    rows = verify_s1_cone(u0, [1.0, 100.0], [3.0, 5.0, 7.0])
    assert all(r.passed for r in rows)
    rows = verify_s2_cone(amplitude_w, [0.5, 10.0], [3.5, 6.5])
    assert all(r.passed for r in rows)
    assert math.isnan(rows[0].sup_bound)


def test_refined_s2_fixture(u0, potential):
    tv = amp.tilde_v(potential)
    for t, xi in ((1.0, 3.5), (100.0, 6.6)):
        assert amp.verify_refined_s2(tv, u0, t, 2 * xi * t).passed
    with pytest.raises(ValueError):
        amp.verify_refined_s2(tv, u0, 1.0, 16.0)


def test_positivity_intervals_for_fixture(u0, potential):
    report = amp.positivity_intervals(amp.tilde_v(potential), u0)
    assert report.geometry_ok and report.nonempty
    assert [(iv.lo, iv.hi) for iv in report.intervals] == [(3.0, 4.0), (6.0, 7.0)]
    assert not report.literal_sign_hypothesis
    assert 3.0 < report.best_direction() < 7.0
