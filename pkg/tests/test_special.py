import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncdl_lab.errors import DomainError, InvalidInput, OrderOverflow
from ncdl_lab.special import (BESSEL_ORDER_CAP, LogProductAccumulator, bessel_j_array, bessel_j_integral,
                              bessel_j_series, coeff_series, i_pow, stable_coeff)
from scipy.special import jv


def test_i_pow_cycle():
    assert [i_pow(k) for k in range(-4, 5)] == [1, 1j, -1, -1j, 1, 1j, -1, -1j, 1]


@pytest.mark.parametrize("n,x,val", [(0, 0.0, 1.0), (3, 0.0, 0.0)])
def test_series_at_origin(n, x, val):
    assert bessel_j_series(n, x) == val


def test_series_matches_integral_small():
    assert abs(bessel_j_series(1, 1.0) - bessel_j_integral(1, 1.0)) < 1e-12
    assert abs(bessel_j_integral(2, 5.0) - bessel_j_series(2, 5.0)) < 1e-12


def test_integral_at_origin_and_even_symmetry():
    assert abs(bessel_j_integral(0, 0.0) - 1.0) < 1e-15
    assert bessel_j_integral(-4, 3.0) == pytest.approx(bessel_j_integral(4, 3.0), abs=1e-15)


def test_against_scipy_reference():
    for n in (-7, 0, 2, 11, 40):
        for x in (0.3, 4.0, 17.5, 35.0):
            assert abs(bessel_j_series(n, x) - jv(n, x)) < 1e-13


def test_large_argument_no_cancellation():
    # terms reach ~1e8 here; fixed point keeps full accuracy
    assert abs(bessel_j_series(0, 40.0) - jv(0, 40.0)) < 1e-14


def test_errors():
    with pytest.raises(OrderOverflow):
        bessel_j_series(BESSEL_ORDER_CAP + 1, 1.0)
    with pytest.raises(InvalidInput):
        bessel_j_series(1, float("nan"))
    with pytest.raises(InvalidInput):
        bessel_j_series(1.5, 1.0)
    with pytest.raises(DomainError):
        bessel_j_integral(0, 1e3)


def test_array_matches_scalar():
    x = np.linspace(-10, 10, 21)
    assert np.allclose(bessel_j_array(3, x), [bessel_j_integral(3, v) for v in x], atol=1e-15)


@given(st.integers(-30, 30), st.floats(0, 20))
def test_series_integral_agree(n, x):
    assert abs(bessel_j_series(n, x) - bessel_j_integral(n, x)) < 1e-10


@given(st.integers(-30, 30), st.floats(-20, 20))
def test_reflection_symmetries(n, x):
    a = bessel_j_series(n, x)
    assert bessel_j_series(-n, x) == pytest.approx((-1) ** n * a, abs=1e-14)
    assert bessel_j_series(n, -x) == pytest.approx((-1) ** n * a, abs=1e-14)


@given(st.integers(1, 25), st.floats(0.1, 20))
def test_three_term_recurrence(n, x):
    lhs = bessel_j_series(n - 1, x) + bessel_j_series(n + 1, x)
    assert lhs == pytest.approx(2 * n / x * bessel_j_series(n, x), abs=1e-11)


def test_stable_coeff_examples():
    assert stable_coeff(100, 0, 0, 0, 0.37) == 1
    assert stable_coeff(10, 0, 0, 1, 0.2) == pytest.approx(-1.0, abs=1e-14)
    v = stable_coeff(10 ** 6, 2, 3, 0, 1e-6)
    assert np.isfinite(v)
    # (-1)^(q+s) i^s with s = 1 gives the phase -i
    assert v == pytest.approx(-1j * math.sqrt(1 + 3e-6) * math.sqrt(0.5), rel=1e-14)


def _unreduced(lam, j, l, q, alpha):
    # sqrt((lam+l)!(lam+j)!) / (q!(q+s)!(lam+j-q)!) (alpha/2)^(q+s/2) with its phase
    s = l - j
    log = (0.5 * (math.lgamma(lam + l + 1) + math.lgamma(lam + j + 1)) - math.lgamma(q + 1)
           - math.lgamma(q + s + 1) - math.lgamma(lam + j - q + 1) + (q + s / 2) * math.log(alpha / 2))
    return (-1) ** (q + s) * i_pow(s) * math.exp(log)


@given(st.integers(1, 60), st.integers(-5, 5), st.integers(-5, 5), st.integers(0, 8),
       st.floats(0.01, 3.0))
def test_stable_coeff_matches_factorial_form(lam, j, l, q, alpha):
    if lam + j < 0 or lam + l < 0 or q > lam + j or l - j + q < 0:
        with pytest.raises(DomainError):
            stable_coeff(lam, j, l, q, alpha)
        return
    assert stable_coeff(lam, j, l, q, alpha) == pytest.approx(_unreduced(lam, j, l, q, alpha), rel=1e-11)


def test_stable_coeff_domain_and_overflow():
    with pytest.raises(DomainError):
        stable_coeff(0, 0, 0, 0, 1.0)
    with pytest.raises(DomainError):
        stable_coeff(5, 0, 0, 0, -1.0)
    with pytest.raises(DomainError):
        stable_coeff(10 ** 6, 0, 0, 400, 1e3)


def test_stable_coeff_huge_lambda_is_finite():
    v = stable_coeff(10 ** 9, 3, 5, 2, 1e-9)
    assert np.isfinite(v) and v != 0


def test_coeff_series_matches_scalar():
    q, logm, ph = coeff_series(40, -2, 1, 0.05, 30)
    for qq, lm, p in zip(q, logm, ph):
        assert p * math.exp(lm) == pytest.approx(stable_coeff(40, -2, 1, int(qq), 0.05), rel=1e-12)


def test_accumulator():
    acc = LogProductAccumulator()
    acc.mul_positive(4.0)
    acc.mul_phase(-1j)
    assert acc.value() == pytest.approx(-4j)
    with pytest.raises(DomainError):
        acc.mul_positive(0.0)
    acc.add_log(800)
    with pytest.raises(DomainError):
        acc.value()
