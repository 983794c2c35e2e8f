import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscillax.bands import BandFunction, CosBump
from oscillax.expansion import (PACKAGED_MODES, cor_c1, cor_c2, cor_c3, erdelyi_c1, erdelyi_c2,
                                first_remainder_constant, leading_term, oracle_integral,
                                second_term, tilde_c1, tilde_c2, verify_packaged,
                                verify_one_term, verify_two_term)
from oscillax.oracle import OscillatoryIntegral, integrate

# mpmath references from tests/oracle_mp.py
OSC_10_53 = 0.31704307297789250022 - 0.0026197880116822690547j
OSC_50_7 = -1.0401015388771540067e-10 + 2.5618665334933631652e-11j
ERDELYI_C1 = 3.6210059165334964726
ERDELYI_C2 = 0.4262402854181757882


def test_oracle_matches_reference(u0):
    assert abs(oracle_integral(u0, 10.0, 5.3, 1e-13).value - OSC_10_53) < 1e-12
    assert abs(oracle_integral(u0, 50.0, 7.0, 1e-15).value - OSC_50_7) < 1e-14


def test_oracle_gaussian_moment():
    # int_{-inf}^{inf} exp(-p^2) exp(-i omega p^2) dp = sqrt(pi / (1 + i omega)), truncated at |p| = 7
    oi = OscillatoryIntegral(lambda p: np.exp(-p * p), -7.0, 7.0, 3.0, 0.0)
    assert abs(integrate(oi, 1e-12).value - np.sqrt(math.pi / (1 + 3j))) < 1e-11


def test_constant_values():
    assert erdelyi_c1(0.75) == pytest.approx(ERDELYI_C1, rel=1e-14)
    assert erdelyi_c2(2.25) == pytest.approx(ERDELYI_C2, rel=1e-14)
    assert first_remainder_constant(0.75) == pytest.approx(erdelyi_c1(0.75), rel=1e-14)


def test_derived_constants_relations():
    assert cor_c1(0.75, 4, 6) == pytest.approx(math.sqrt(math.pi) + cor_c2(0.75, 4, 6))
    assert cor_c2(0.75, 4, 6) == pytest.approx(erdelyi_c1(0.75) * 2**0.5)
    assert cor_c3(2.25, 4, 6) == pytest.approx(erdelyi_c2(2.25) * 2**0.5)
    assert tilde_c1(0.75, 4, 6) == pytest.approx(cor_c1(0.75, 4, 6) / (2 * math.pi))
    assert tilde_c2(0.75, 4, 6) == pytest.approx(cor_c2(0.75, 4, 6) / (2 * math.pi))


def test_delta_validation():
    for bad in (0.5, 1.0):
        with pytest.raises(ValueError):
            erdelyi_c1(bad)
    for bad in (2.0, 2.5):
        with pytest.raises(ValueError):
            erdelyi_c2(bad)


def test_leading_term_is_asymptotic(u0):
    omega = 1e4
    value = oracle_integral(u0, omega, 5.0, 1e-13).value
    rel = abs(value - leading_term(u0, omega, 5.0)) / abs(value)
    assert rel < 1e-3
    rel2 = abs(value - leading_term(u0, omega, 5.0) - second_term(u0, omega, 5.0)) / abs(value)
    assert rel2 < rel


def test_second_term_needs_smoothness():
    f = BandFunction(CosBump(m=1), 0.0, 1.0)
    with pytest.raises(ValueError):
        second_term(f, 1.0, 0.5)
    with pytest.raises(ValueError):
        verify_two_term(BandFunction(CosBump(m=2), 0.0, 1.0), 10.0, 0.5)


def test_packaged_mode_preconditions(u0):
    with pytest.raises(ValueError):
        verify_packaged(u0, 10.0, 5.0, "iii")
    with pytest.raises(ValueError):
        verify_packaged(u0, 10.0, 7.0, "ii")
    with pytest.raises(ValueError):
        verify_packaged(u0, 0.5, 5.0, "i")
    with pytest.raises(ValueError):
        verify_packaged(u0, 10.0, 5.0, "v")


def test_fixture_reports_pass(u0):
    for omega in (1.0, 10.0, 1e3):
        assert verify_one_term(u0, omega, 5.2).passed
        assert verify_two_term(u0, omega, 3.1).passed
        for mode in PACKAGED_MODES:
            p0 = 5.2 if mode in ("i", "ii") else 7.5
            assert verify_packaged(u0, omega, p0, mode).passed


@settings(max_examples=20, deadline=None)
@given(m=st.integers(1, 3), lo=st.floats(-3, 3), width=st.floats(0.5, 8), phase=st.floats(0, 6.2),
       log_omega=st.floats(0, 4), frac=st.floats(0, 1))
def test_one_term_bound_property(m, lo, width, phase, log_omega, frac):
    f = BandFunction(CosBump(m=m, phase=phase), lo, lo + width)
    p0 = lo - 3 + frac * (width + 6)
    report = verify_one_term(f, 10**log_omega, p0)
    assert report.passed, report
