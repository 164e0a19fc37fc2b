"""Matrix elements of pi_{lam,alpha}(F), pi_r(F) and the characters, each by a fast
formula and by an independent brute-force oracle.

Index conventions.  Entries are labelled (l, j) by torus modes; the generic
representation is read through the intertwiner chi_j -> i^j b_{j+lam}, so

    entry(l, j) = i^(l-j) <pi_{lam,alpha}(F) b_{j+lam}, b_{l+lam}>.

A component (m, s) of F feeds exactly one entry: j = -m, l = j + s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import DomainError, IterationLimit, OracleBudgetExceeded, WindowError
from .fock import ModeWindow, OperatorMatrix
from .quad import DiskRule, RadialRule, TorusRule, radial_moments
from .special import bessel_j_array, coeff_series, i_pow
from .testfn import TestFunction, char_value, eval_G_fourier_z

__all__ = [
    "Generic", "Boundary", "Character", "matrix_generic", "matrix_generic_oracle",
    "matrix_limit", "matrix_limit_oracle", "char_value", "spectral_norm", "matrix_at",
]

ORACLE_MAX_DIM = 12
R_MAX = 10.0
SERIES_TAIL_TOL = 1e-17
# largest tolerated ratio between the biggest q-term and the result scale
SERIES_GROWTH_LIMIT = 1e4
LAGUERRE_MAX_N = 20000


@dataclass(frozen=True)
class Generic:
    lam: int
    alpha: float

    def __post_init__(self):
        if self.alpha == 0 or not math.isfinite(self.alpha):
            raise DomainError("generic points need a finite nonzero alpha")


@dataclass(frozen=True)
class Boundary:
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("boundary points need r > 0")


@dataclass(frozen=True)
class Character:
    lam: int


# ---------------------------------------------------------------- generic, fast

def _series_cut(lam, j, s, alpha, R):
    """Last q needed and log of the largest term of the dominating series."""
    omega = 0.5 * lam * alpha
    y = omega * R * R * (1.0 + max(j, 0) / lam)
    q0 = max(0, -s)
    qcap = lam + j
    logy = math.log(y) if y > 0 else -math.inf
    peak = -math.inf
    q = q0
    while q <= qcap:
        term = q * logy - math.lgamma(q + 1) - math.lgamma(q + s + 1) if y > 0 else (0.0 if q == q0 else -math.inf)
        peak = max(peak, term)
        if q * (q + s) > y and term < math.log(SERIES_TAIL_TOL):
            break
        q += 1
    return min(q, qcap), peak


def _entry_series(comps, lam, alpha, j, l, qmax):
    s = l - j
    q, log_mag, phase = coeff_series(lam, j, l, alpha, qmax)
    if q.size == 0:
        return 0j
    total = 0j
    for c in comps:
        mom = radial_moments(q, s, alpha / 4.0, c.radial)
        total += complex(c.alpha(alpha)) * np.sum(phase * np.exp(log_mag) * mom)
    return total


def laguerre_kernel(lam, j, l, alpha, rho):
    """sum_q coeff_q rho^(2q+s) exp(-alpha rho^2/4) in closed form.

    This is a displaced number-state matrix element:
    (-1)^s i^s sqrt(N!/L!) x^(s/2) exp(-x/2) L_N^(s)(x) with x = alpha rho^2 / 2,
    and the mirrored expression when s < 0.
    """
    s = l - j
    N, L = lam + j, lam + l
    x = 0.5 * alpha * np.asarray(rho, dtype=float) ** 2
    lo, a = (N, s) if s >= 0 else (L, -s)
    logpref = 0.5 * (gammaln(lo + 1) - gammaln(lo + a + 1))
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    mag = np.exp(logpref + 0.5 * a * logx - 0.5 * x) if a else np.exp(logpref - 0.5 * x)
    phase = i_pow(s) * (-1.0 if s % 2 else 1.0) if s >= 0 else i_pow(s)
    return phase * mag * eval_genlaguerre(lo, a, x)


def _entry_laguerre(comps, lam, alpha, j, l):
    total = 0j
    for c in comps:
        r0, r1 = c.radial.support
        rule = RadialRule.composite(r0, r1, 64, 24, tuple(c.radial.breakpoints()))
        k = laguerre_kernel(lam, j, l, alpha, rule.nodes)
        total += complex(c.alpha(alpha)) * 2.0 * np.pi * np.dot(rule.weights, k * c.radial(rule.nodes) * rule.nodes)
    return total


def generic_entry(F: TestFunction, lam: int, alpha: float, j: int, l: int, route: str = "auto") -> complex:
    """entry(l, j) of pi_{lam,alpha}(F) for alpha > 0; zero unless F has a (-j, l-j) component."""
    comps = F.for_modes(-j, l - j)
    if not comps:
        return 0j
    if lam + j < 0 or lam + l < 0:
        raise WindowError("entry outside the Fock index range")
    R = max(c.radial.support[1] for c in comps)
    qmax, peak = _series_cut(lam, j, l - j, alpha, R)
    if route == "auto":
        route = "laguerre" if (peak > math.log(SERIES_GROWTH_LIMIT) and lam + max(j, l) <= LAGUERRE_MAX_N) else "series"
    if route == "laguerre":
        return _entry_laguerre(comps, lam, alpha, j, l)
    return _entry_series(comps, lam, alpha, j, l, qmax)


def _check_generic_window(lam, alpha, window):
    sign = 1 if alpha > 0 else -1
    if window.sign != sign:
        raise WindowError(f"alpha of sign {sign} needs a window with sign {sign}")
    if window.lam is not None and window.lam != lam:
        raise WindowError("window was built for a different lambda")
    idx = window.indices
    if sign * lam + sign * (idx[0] if sign > 0 else idx[-1]) < 0:
        raise WindowError("window reaches below Fock index 0")


def matrix_generic(F: TestFunction, lam: int, alpha: float, window: ModeWindow,
                   route: str = "auto") -> OperatorMatrix:
    """Truncated pi_{lam,alpha}(F) on the torus-mode window."""
    lam = int(lam)
    if alpha == 0 or not math.isfinite(alpha):
        raise DomainError("alpha must be finite and nonzero")
    _check_generic_window(lam, alpha, window)
    if alpha < 0:
        # antiholomorphic model: entry(l, j) = conj(entry of conj(F) at (-lam, |alpha|), (-l, -j))
        mirror = ModeWindow(-lam, window.J, 1)
        inner = matrix_generic(F.conjugate(), -lam, -alpha, mirror, route).entries
        return OperatorMatrix(window, np.conj(inner[::-1, ::-1]))
    out = OperatorMatrix.zeros(window)
    idx = window.indices
    for c in F.components:
        j, l = -c.m, -c.m + c.s
        if window.contains(j) and window.contains(l) and lam + j >= 0 and lam + l >= 0:
            pos_l, pos_j = window.position(l), window.position(j)
            if out.entries[pos_l, pos_j] == 0:
                out.entries[pos_l, pos_j] = generic_entry(F, lam, alpha, j, l, route)
    del idx
    return out


# -------------------------------------------------------------- generic, oracle

def _log_fock_basis(N, alpha, u):
    """log of b_N(u) exp(-alpha |u|^2 / 4) with b_N orthonormal for (alpha/2pi) e^{-alpha|w|^2/2} dw."""
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(u))
    lognorm = 0.5 * (N * math.log(alpha / 2.0) - math.lgamma(N + 1))
    mag = lognorm + N * logabs - 0.25 * alpha * np.abs(u) ** 2 if N else lognorm - 0.25 * alpha * np.abs(u) ** 2
    return mag + 1j * N * np.angle(u)


def _fock_weight_grid(Nmin, Nmax, alpha, R, scale):
    width = 12.0 / math.sqrt(alpha)
    lo = max(0.0, math.sqrt(2.0 * Nmin / alpha) - width - R)
    hi = math.sqrt(2.0 * Nmax / alpha) + width + R
    panels = max(4, int(math.ceil((hi - lo) / (2.0 / math.sqrt(alpha)))))
    radial = RadialRule.composite(lo, hi, int(panels * scale), 12)
    torus = TorusRule(int(128 * scale))
    rho, th = np.meshgrid(radial.nodes, torus.points, indexing="ij")
    w = (rho * np.exp(1j * th)).ravel()
    wts = np.outer(radial.weights * radial.nodes, np.full(torus.n, 2 * np.pi / torus.n)).ravel()
    return w, wts


def _oracle_kernel(lam, alpha, window, R, scale):
    """I[l, j, z] = int_w conj(h_L(w)) h_N(w+z) exp(-i alpha Im(w conj z)/2) dw, scaled by alpha/2pi."""
    idx = window.indices
    zr = DiskRule.build(R, int(24 * scale))
    z = zr.nodes
    w, wts = _fock_weight_grid(lam + idx[0], lam + idx[-1], alpha, R, scale)
    left = np.stack([np.exp(np.conj(_log_fock_basis(lam + l, alpha, w))) for l in idx]) * wts
    left *= alpha / (2.0 * np.pi)
    kern = np.empty((idx.size, idx.size, z.size), dtype=complex)
    chunk = max(1, 4_000_000 // w.size)
    step = math.sqrt(alpha / 2.0)
    for start in range(0, z.size, chunk):
        zc = z[start:start + chunk]
        twist = np.exp(-0.5j * alpha * np.imag(np.multiply.outer(w, np.conj(zc))))
        shifted = np.add.outer(w, zc)
        # h_{N+1} = h_N * u * sqrt(alpha / (2 (N+1))), seeded once in log space
        right = np.exp(_log_fock_basis(lam + idx[0], alpha, shifted)) * twist
        for b, j in enumerate(idx):
            if b:
                right *= shifted * (step / math.sqrt(lam + j))
            kern[:, b, start:start + chunk] = left @ right
    return zr, kern


_ORACLE_CACHE: dict = {}


def matrix_generic_oracle(F: TestFunction, lam: int, alpha: float, window: ModeWindow,
                          scale: float = 1.0) -> OperatorMatrix:
    """Brute-force <pi(F) b_N, b_L> by polar quadrature over z and w.

    F^3 is rebuilt from the mode table on a torus grid and integrated against
    exp(-i j theta); neither the selection rule nor the q-series is used.
    """
    lam = int(lam)
    if len(window) > ORACLE_MAX_DIM:
        raise OracleBudgetExceeded(f"oracle window of size {len(window)} exceeds {ORACLE_MAX_DIM}")
    if not alpha > 0:
        raise DomainError("the oracle implements the holomorphic model only (alpha > 0)")
    _check_generic_window(lam, alpha, window)
    R = max(F.radius, 1.0)
    key = (lam, float(alpha), tuple(window.indices), R, scale)
    if key not in _ORACLE_CACHE:
        _ORACLE_CACHE.clear()
        _ORACLE_CACHE[key] = _oracle_kernel(lam, alpha, window, R, scale)
    zr, kern = _ORACLE_CACHE[key]
    idx = window.indices
    out = np.zeros((idx.size, idx.size), dtype=complex)
    if F.is_zero:
        return OperatorMatrix(window, out)
    M = max(F.mode_bound[0], 1)
    torus = TorusRule(4 * M + 8)
    theta = torus.points
    f3 = F.eval_F3(theta[:, None], zr.nodes[None, :], alpha)
    for b, j in enumerate(idx):
        theta_j = torus.integrate(np.exp(-1j * j * theta)[:, None] * f3, axis=0)
        vals = kern[:, b, :] @ (theta_j * zr.weights)
        out[:, b] = vals * np.array([i_pow(int(l - j)) for l in idx])
    return OperatorMatrix(window, out)


# ------------------------------------------------------------------ limit, fast

def _check_r(r):
    if not (0 < r <= R_MAX):
        raise DomainError(f"r must lie in (0, {R_MAX}], got {r!r}")


def limit_entry(F: TestFunction, r: float, j: int, l: int) -> complex:
    s = l - j
    total = 0j
    for c in F.for_modes(-j, s):
        r0, r1 = c.radial.support
        rule = RadialRule.composite(r0, r1, 16, 24, tuple(c.radial.breakpoints()))
        jv = bessel_j_array(s, -r * rule.nodes)
        total += complex(c.alpha(0.0)) * 2.0 * np.pi * np.dot(rule.weights, jv * c.radial(rule.nodes) * rule.nodes)
    return i_pow(s) * total


def matrix_limit(F: TestFunction, r: float, window: ModeWindow) -> OperatorMatrix:
    """Truncated pi_r(F) on l^2(T), via Bessel kernels J_{l-j}(-r rho)."""
    _check_r(r)
    out = OperatorMatrix.zeros(window)
    for c in F.components:
        j, l = -c.m, -c.m + c.s
        if window.contains(j) and window.contains(l):
            pl, pj = window.position(l), window.position(j)
            if out.entries[pl, pj] == 0:
                out.entries[pl, pj] = limit_entry(F, r, j, l)
    return out


# ---------------------------------------------------------------- limit, oracle

def matrix_limit_oracle(F: TestFunction, r: float, window: ModeWindow, n_torus: int = 32,
                        order: int = 128) -> OperatorMatrix:
    """Double torus quadrature of exp(ij(mu-theta)) exp(-il mu) F^{2,3}(theta, r e^{i mu})."""
    _check_r(r)
    if len(window) > ORACLE_MAX_DIM:
        raise OracleBudgetExceeded(f"oracle window of size {len(window)} exceeds {ORACLE_MAX_DIM}")
    idx = window.indices
    out = np.zeros((idx.size, idx.size), dtype=complex)
    if F.is_zero:
        return OperatorMatrix(window, out)
    torus = TorusRule(n_torus)
    ang = torus.points
    v = r * np.exp(1j * ang)
    # F23[theta, mu]
    f23 = np.zeros((ang.size, ang.size), dtype=complex)
    for m in sorted({c.m for c in F.components}):
        f23 += np.outer(np.exp(-1j * m * ang), eval_G_fourier_z(F, m, v, order))
    for a, l in enumerate(idx):
        for b, j in enumerate(idx):
            weight = np.outer(np.exp(-1j * j * ang), np.exp(1j * (j - l) * ang))
            out[a, b] = np.mean(weight * f23)
    return OperatorMatrix(window, out)


# --------------------------------------------------------------- characters

def matrix_character_diag(F: TestFunction, window: ModeWindow) -> np.ndarray:
    return np.array([char_value(int(j), F) for j in window.indices])


def matrix_at(F: TestFunction, point, window: ModeWindow) -> OperatorMatrix | complex:
    """Dispatch on the spectrum point type."""
    if isinstance(point, Generic):
        return matrix_generic(F, point.lam, point.alpha, window)
    if isinstance(point, Boundary):
        return matrix_limit(F, point.r, window)
    if isinstance(point, Character):
        return char_value(point.lam, F)
    raise DomainError(f"unknown spectrum point {point!r}")


# -------------------------------------------------------------------- norms

POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000
_STALL_WINDOW = 200
_DENSE_AFTER = 5000   # near-degenerate top pair: switch to a dense solve
_DENSE_MAX_DIM = 4096


def _start_vector(n):
    k = np.arange(n)
    return np.exp(1j * 0.7548776662466927 * k * (k + 1)) * (1.0 + 1.0 / (k + 1))


def spectral_norm(A) -> float:
    """Largest singular value by power iteration on A*A.

    Stops when the eigen-residual falls below 1e-12 relative, or when the
    Rayleigh quotient has stopped moving at machine precision (clustered top
    singular values, where the residual cannot shrink but the value is fixed).
    A top pair split by less than the iteration can resolve falls back to a
    dense Hermitian eigensolve after 5000 steps.
    """
    a = A.entries if isinstance(A, OperatorMatrix) else np.asarray(A, dtype=complex)
    if a.size == 0:
        return 0.0
    if not np.all(np.isfinite(a)):
        raise DomainError("non-finite matrix entries")
    scale = np.max(np.abs(a))
    if scale == 0:
        return 0.0
    a = a / scale
    b = a.conj().T @ a
    n = b.shape[0]
    if n <= 3:
        return float(scale * math.sqrt(max(np.linalg.eigvalsh(b)[-1], 0.0)))
    v = _start_vector(n)
    v /= np.linalg.norm(v)
    mu_prev, stall = -1.0, 0
    for it in range(POWER_MAX_ITER):
        if it == _DENSE_AFTER and n <= _DENSE_MAX_DIM:
            return float(scale * math.sqrt(max(np.linalg.eigvalsh(b)[-1], 0.0)))
        w = b @ v
        mu = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        if np.linalg.norm(w - mu * v) <= POWER_TOL * max(mu, 1e-300):
            return float(scale * math.sqrt(mu))
        stall = stall + 1 if abs(mu - mu_prev) <= 4e-16 * mu else 0
        if stall >= _STALL_WINDOW:
            return float(scale * math.sqrt(mu))
        mu_prev = mu
        v = w / nw
    raise IterationLimit(f"power iteration did not converge in {POWER_MAX_ITER} steps")
