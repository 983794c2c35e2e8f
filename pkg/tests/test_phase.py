import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscillax.phase import L_n, check_phi_bound, erdelyi_constants, phi_n, phi_n_at_zero
from oscillax.quad import QuadratureError

# mpmath ray integrals from tests/oracle_mp.py
REFERENCE = {
    (1, 0.3, 2.0): -0.14408400581603222669 + 0.42515507694879469583j,
    (2, 1.0, 10.0): 0.002217806856386184306 - 0.0010232621064805060323j,
    (3, 0.05, 100.0): 0.00009914688626011586321 - 0.000015523787304441420129j,
    (4, 2.0, 0.5): 0.019742902881367859138 - 0.016965452031807497877j,
}


@pytest.mark.parametrize("key", sorted(REFERENCE))
def test_phi_matches_reference(key):
    assert abs(phi_n(*key, quad_tol=1e-13) - REFERENCE[key]) < 1e-11


def test_phi1_is_complementary_fresnel():
    # phi_1(s) = -int_s^inf exp(-i omega z^2) dz = -(sqrt(pi)/2) e^{-i pi/4} erfc(e^{i pi/4} sqrt(omega) s)/sqrt(omega)
    s, omega = 0.7, 3.0
    ref = -mp.sqrt(mp.pi) / 2 * mp.expj(-mp.pi / 4) * mp.erfc(mp.expj(mp.pi / 4) * mp.sqrt(omega) * s) / mp.sqrt(omega)
    assert abs(phi_n(1, s, omega, 1e-13) - complex(ref)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("omega", [0.5, 1.0, 10.0, 100.0])
def test_closed_form_at_zero(n, omega):
    assert abs(phi_n(n, 0.0, omega, 1e-12) - phi_n_at_zero(n, omega)) < 1e-8


def test_derivative_chain():
    s, omega, h = 0.4, 2.0, 1e-5
    for n in (2, 3, 4):
        fd = (phi_n(n, s + h, omega, 1e-14) - phi_n(n, s - h, omega, 1e-14)) / (2 * h)
        assert abs(fd - phi_n(n - 1, s, omega, 1e-14)) < 1e-7


def test_constants_roots():
    for n in (1, 2, 3, 4):
        c = erdelyi_constants(n)
        k = c.K_n
        assert c.a_n * k * k - c.b_n * k - c.c_n == pytest.approx(0.0, abs=1e-14)
        assert k > 0


def test_delta_range_and_order_validation():
    with pytest.raises(ValueError):
        L_n(1, 1.0)
    with pytest.raises(ValueError):
        phi_n(5, 0.1, 1.0)
    with pytest.raises(ValueError):
        phi_n(1, -0.1, 1.0)
    with pytest.raises(ValueError):
        check_phi_bound(1, 0.75, 0.0, 1.0)


def test_budget_overrun_raises():
    with pytest.raises(QuadratureError):
        phi_n(2, 3.0, 1e4, quad_tol=1e-30, max_panels=4)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), frac=st.floats(0.01, 0.99), s=st.floats(0.01, 5.0),
       log_omega=st.floats(math.log10(0.5), 4.0))
def test_phi_bound_property(n, frac, s, log_omega):
    delta = n / 2 + frac / 2
    lhs, rhs, _ = check_phi_bound(n, delta, s, 10**log_omega)
    assert lhs <= rhs + 1e-9
