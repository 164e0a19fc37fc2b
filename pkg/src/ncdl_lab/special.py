"""Bessel functions of integer order and the factorial-ratio coefficients of the
Fock-space matrix elements.

Two independent routes to J_n on the real line are provided: the power series,
summed in exact dyadic fixed-point arithmetic, and the integral representation,
evaluated with the periodic trapezoid rule.  They are used as mutual oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, InvalidInput, OrderOverflow, QuadratureInconsistency

BESSEL_ORDER_CAP = 512
BESSEL_MAX_ARG = 50.0
SERIES_REL_CUTOFF = 1e-17
SERIES_MAX_TERMS = 10_000
IMAG_RESIDUE_TOL = 1e-12

# fixed-point scale for the series; the largest partial term for |x| <= 50 is ~1e20
_FIXED_BITS = 256

_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)


def i_pow(k: int) -> complex:
    """Exact i**k for integer k."""
    return _I_POWERS[k % 4]


def _check_order_arg(n, x):
    if not isinstance(n, (int, np.integer)):
        raise InvalidInput(f"Bessel order must be an integer, got {n!r}")
    n = int(n)
    if abs(n) > BESSEL_ORDER_CAP:
        raise OrderOverflow(f"|n|={abs(n)} exceeds the configured cap {BESSEL_ORDER_CAP}")
    x = float(x)
    if not math.isfinite(x):
        raise InvalidInput(f"non-finite Bessel argument {x!r}")
    if abs(x) > BESSEL_MAX_ARG:
        raise DomainError(f"|x|={abs(x)} outside the supported range [0, {BESSEL_MAX_ARG}]")
    return n, x


def _trunc_div(a: int, b: int) -> int:
    # integer division rounding toward zero, b > 0
    return a // b if a >= 0 else -((-a) // b)


def bessel_j_series(n: int, x: float) -> float:
    """J_n(x) from its power series.

    The series is summed exactly in 256-bit fixed point, so the usual loss of
    accuracy from alternating terms of size ~e^|x| does not occur.  Summation
    stops once past the peak term and the next term is below 1e-17 of the
    partial sum.
    """
    n, x = _check_order_arg(n, x)
    if n < 0:
        value = bessel_j_series(-n, x)
        return -value if n % 2 else value
    if x == 0.0:
        return 1.0 if n == 0 else 0.0

    xf = Fraction(x)
    t = xf * xf / 4
    p, q = t.numerator, t.denominator

    one = 1 << _FIXED_BITS
    term = one
    total = one
    k = 0
    while True:
        k += 1
        if k > SERIES_MAX_TERMS:
            raise InvalidInput(f"Bessel series did not settle within {SERIES_MAX_TERMS} terms")
        term = _trunc_div(-term * p, q * k * (k + n))
        total += term
        past_peak = k * (k + n) > t
        if term == 0 or (past_peak and abs(term) * 10**17 < abs(total)):
            break

    prefactor = (xf / 2) ** n / math.factorial(n)
    return float(Fraction(total, one) * prefactor)


def _trapezoid_points(n: int, xmax: float) -> int:
    return max(64, 2 * (abs(n) + int(math.ceil(abs(xmax))) + 40))


def _bessel_periodic(n: int, x: np.ndarray) -> np.ndarray:
    npts = _trapezoid_points(n, float(np.max(np.abs(x))) if x.size else 0.0)
    k = np.arange(npts)
    theta = 2.0 * np.pi * k / npts
    # exact reduction of n*k modulo the period keeps the phase accurate for large n
    phase = np.exp(-2j * np.pi * ((n * k) % npts) / npts)
    vals = np.exp(1j * np.multiply.outer(x, np.cos(theta))) * phase
    integral = vals.mean(axis=-1) * i_pow(-n)
    resid = np.max(np.abs(integral.imag)) if integral.size else 0.0
    if resid >= IMAG_RESIDUE_TOL:
        raise QuadratureInconsistency(f"imaginary residue {resid:.3e} in J_{n} quadrature")
    return integral.real


def bessel_j_integral(n: int, x: float) -> float:
    """J_n(x) from (i^-n / pi) * int_0^pi exp(i x cos t) cos(n t) dt.

    The integrand is extended to a full period and integrated with the
    trapezoid rule, which converges geometrically for periodic analytic
    integrands.
    """
    n, x = _check_order_arg(n, x)
    return float(_bessel_periodic(n, np.asarray([x]))[0])


def bessel_j_array(n: int, x) -> np.ndarray:
    """Vectorised integral-representation J_n over an array of real arguments."""
    n, _ = _check_order_arg(n, 0.0)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInput("non-finite Bessel argument")
    if x.size and np.max(np.abs(x)) > BESSEL_MAX_ARG:
        raise DomainError(f"arguments exceed {BESSEL_MAX_ARG}")
    return _bessel_periodic(n, x)


@dataclass
class LogProductAccumulator:
    """A complex number held as sign * exp(log_magnitude)."""

    log_magnitude: float = 0.0
    sign: complex = 1 + 0j

    def mul_positive(self, value: float) -> None:
        if not value > 0:
            raise DomainError(f"expected a positive factor, got {value!r}")
        self.log_magnitude += math.log(value)

    def add_log(self, log_value: float) -> None:
        self.log_magnitude += log_value

    def mul_phase(self, phase: complex) -> None:
        self.sign *= phase

    def value(self) -> complex:
        if self.log_magnitude > 709.0:
            raise DomainError(f"magnitude exp({self.log_magnitude:.1f}) exceeds double range")
        return self.sign * math.exp(self.log_magnitude)


def _check_coeff_domain(lam, j, l, q, alpha):
    if not isinstance(lam, (int, np.integer)) or lam < 1:
        raise DomainError(f"lambda must be a positive integer, got {lam!r}")
    if q < 0:
        raise DomainError("q must be non-negative")
    if l - j + q < 0:
        raise DomainError("l - j + q must be non-negative")
    if lam + j < 0 or lam + l < 0:
        raise DomainError("Fock indices lambda+j and lambda+l must be non-negative")
    if q > lam + j:
        raise DomainError("q must not exceed lambda + j")
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be positive and finite, got {alpha!r}")


def stable_coeff(lam: int, j: int, l: int, q: int, alpha: float) -> complex:
    """Coefficient of the q-th radial moment in <pi(F) V chi_j, V chi_l>.

    Equals (-1)^(q+s) i^s sqrt(prod_{i=j+1}^{l} (1+i/lam)) prod_{i<q} (1+(j-i)/lam)
    (lam*alpha/2)^(q+s/2) / (q! (q+s)!) with s = l - j.  For s < 0 the square-root
    product becomes the reciprocal over i = l+1..j.  Everything is accumulated
    in log space so lam up to 1e9 is harmless.
    """
    lam, j, l, q = int(lam), int(j), int(l), int(q)
    _check_coeff_domain(lam, j, l, q, alpha)
    s = l - j
    acc = LogProductAccumulator()
    acc.mul_phase(i_pow(s) * (-1 if (q + s) % 2 else 1))
    if s >= 0:
        acc.add_log(0.5 * math.fsum(math.log1p(i / lam) for i in range(j + 1, l + 1)))
    else:
        acc.add_log(-0.5 * math.fsum(math.log1p(i / lam) for i in range(l + 1, j + 1)))
    acc.add_log(math.fsum(math.log1p((j - i) / lam) for i in range(q)))
    acc.add_log((q + 0.5 * s) * math.log(lam * alpha / 2.0))
    acc.add_log(-math.lgamma(q + 1) - math.lgamma(q + s + 1))
    return acc.value()


def coeff_series(lam: int, j: int, l: int, alpha: float, qmax: int):
    """Log-magnitudes and phases of stable_coeff for q = q0..qmax at once.

    Returns ``(q, log_mag, phase)`` arrays, q0 = max(0, j - l).
    """
    lam, j, l = int(lam), int(j), int(l)
    s = l - j
    q0 = max(0, -s)
    qmax = min(int(qmax), lam + j)
    if qmax < q0:
        empty = np.zeros(0)
        return empty.astype(int), empty, empty.astype(complex)
    _check_coeff_domain(lam, j, l, q0, alpha)
    q = np.arange(q0, qmax + 1)
    if s >= 0:
        root = 0.5 * math.fsum(math.log1p(i / lam) for i in range(j + 1, l + 1))
    else:
        root = -0.5 * math.fsum(math.log1p(i / lam) for i in range(l + 1, j + 1))
    steps = np.log1p((j - np.arange(qmax)) / lam)
    falling = np.concatenate(([0.0], np.cumsum(steps)))[q]
    log_mag = root + falling + (q + 0.5 * s) * math.log(lam * alpha / 2.0)
    log_mag = log_mag - gammaln(q + 1) - gammaln(q + s + 1)
    phase = i_pow(s) * np.where((q + s) % 2 == 1, -1.0, 1.0)
    return q, log_mag, phase.astype(complex)
