"""Test elements F of the group algebra, carried as torus/angular Fourier data.

A component (m, s, c, g) contributes c(alpha) * exp(i s arg z) * g(|z|) to
G(m, z, alpha), the m-th torus Fourier coefficient of the partial transform
F^3(theta, z, alpha), with the convention

    G(m, z, alpha) = int_T exp(i m theta) F^3(theta, z, alpha) dtheta

(normalised Haar measure), so that F^3 = sum_m exp(-i m theta) G(m, ., .).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .quad import MAX_RADIUS, DiskRule, TorusRule, radial_moment

RADIAL_KINDS = ("gaussian_poly", "smooth_bump")
ALPHA_KINDS = ("constant", "gaussian_in_alpha", "linear_ramp")


@dataclass(frozen=True)
class RadialProfile:
    """g(rho) = sum_k c_k rho^k exp(-rate rho^2) or a C-infinity bump, cut to ``support``."""

    kind: str = "gaussian_poly"
    coefficients: tuple = (1.0,)
    rate: float = 1.0
    support: tuple = (0.0, 6.0)

    def __post_init__(self):
        if self.kind not in RADIAL_KINDS:
            raise DomainError(f"unknown radial profile kind {self.kind!r}")
        r0, r1 = map(float, self.support)
        if not (0.0 <= r0 < r1 <= MAX_RADIUS):
            raise DomainError(f"radial support {self.support} must satisfy 0 <= r0 < r1 <= {MAX_RADIUS}")
        object.__setattr__(self, "support", (r0, r1))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, "rate", float(self.rate))

    @classmethod
    def gaussian(cls, power: int = 0, rate: float = 1.0, radius: float = 6.0) -> "RadialProfile":
        coeffs = [0.0] * power + [1.0]
        return cls("gaussian_poly", tuple(coeffs), rate, (0.0, radius))

    @classmethod
    def bump(cls, r0: float, r1: float, amplitude: float = 1.0) -> "RadialProfile":
        return cls("smooth_bump", (amplitude,), 0.0, (r0, r1))

    def breakpoints(self):
        r0, r1 = self.support
        if self.kind == "smooth_bump":
            return (r0, 0.5 * (r0 + r1), r1)
        return (r0, r1)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        r0, r1 = self.support
        inside = (rho >= r0) & (rho <= r1)
        if self.kind == "gaussian_poly":
            poly = np.polynomial.polynomial.polyval(rho, self.coefficients)
            vals = poly * np.exp(-self.rate * rho * rho)
        else:
            t = (2.0 * rho - r0 - r1) / (r1 - r0)
            inner = np.abs(t) < 1.0
            safe = np.where(inner, 1.0 - t * t, 1.0)
            vals = np.where(inner, self.coefficients[0] * np.exp(1.0 - 1.0 / safe), 0.0)
        return np.where(inside, vals, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "coefficients": list(self.coefficients),
                "rate": self.rate, "support": list(self.support)}

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("kind", "gaussian_poly"), tuple(d.get("coefficients", (1.0,))),
                   d.get("rate", 1.0), tuple(d.get("support", (0.0, 6.0))))


@dataclass(frozen=True)
class AlphaProfile:
    """c(alpha): constant, c*exp(-width*alpha^2), or c*(1 + slope*alpha)."""

    kind: str = "constant"
    coefficient: complex = 1.0
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in ALPHA_KINDS:
            raise DomainError(f"unknown alpha profile kind {self.kind!r}")
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(self, "param", float(self.param))

    def __call__(self, alpha):
        a = np.asarray(alpha, dtype=float)
        if self.kind == "constant":
            out = np.full(a.shape, self.coefficient)
        elif self.kind == "gaussian_in_alpha":
            out = self.coefficient * np.exp(-self.param * a * a)
        else:
            out = self.coefficient * (1.0 + self.param * a)
        out = np.asarray(out, dtype=complex)
        return out if out.ndim else complex(out)

    def scaled(self, factor: complex) -> "AlphaProfile":
        return AlphaProfile(self.kind, self.coefficient * factor, self.param)

    def conj(self) -> "AlphaProfile":
        return AlphaProfile(self.kind, self.coefficient.conjugate(), self.param)

    def reflected(self) -> "AlphaProfile":
        """alpha -> -alpha."""
        param = -self.param if self.kind == "linear_ramp" else self.param
        return AlphaProfile(self.kind, self.coefficient, param)

    def lipschitz(self) -> float:
        """Bound on |c'(alpha)| for |alpha| <= 1."""
        c = abs(self.coefficient)
        if self.kind == "constant":
            return 0.0
        if self.kind == "linear_ramp":
            return c * abs(self.param)
        return c * math.sqrt(2.0 * abs(self.param)) * math.exp(-0.5)

    def to_dict(self):
        return {"kind": self.kind, "coefficient": [self.coefficient.real, self.coefficient.imag],
                "param": self.param}

    @classmethod
    def from_dict(cls, d):
        c = d.get("coefficient", 1.0)
        if isinstance(c, (list, tuple)):
            c = complex(c[0], c[1] if len(c) > 1 else 0.0)
        return cls(d.get("kind", "constant"), c, d.get("param", 0.0))


@dataclass(frozen=True)
class Component:
    m: int
    s: int
    alpha: AlphaProfile
    radial: RadialProfile

    def to_dict(self):
        return {"m": self.m, "s": self.s, "alpha_profile": self.alpha.to_dict(),
                "radial_profile": self.radial.to_dict()}


@dataclass(frozen=True)
class TestFunction:
    """Finite table of (m, s) components; immutable."""

    __test__ = False  # keep pytest from collecting this class

    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for c in self.components:
            if not isinstance(c.m, (int, np.integer)) or not isinstance(c.s, (int, np.integer)):
                raise DomainError("component modes must be integers")

    @property
    def is_zero(self) -> bool:
        return not self.components

    @property
    def mode_bound(self) -> tuple:
        if not self.components:
            return 0, 0
        return max(abs(c.m) for c in self.components), max(abs(c.s) for c in self.components)

    @property
    def radius(self) -> float:
        return max((c.radial.support[1] for c in self.components), default=0.0)

    def for_mode(self, m: int):
        return [c for c in self.components if c.m == m]

    def for_modes(self, m: int, s: int):
        return [c for c in self.components if c.m == m and c.s == s]

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(self.components + other.components)

    def scaled(self, factor: complex) -> "TestFunction":
        return TestFunction(tuple(Component(c.m, c.s, c.alpha.scaled(factor), c.radial)
                                  for c in self.components))

    def conjugate(self) -> "TestFunction":
        """Pointwise complex conjugate of F on the group."""
        return TestFunction(tuple(Component(-c.m, -c.s, c.alpha.conj().reflected(), c.radial)
                                  for c in self.components))

    def adjoint(self) -> "TestFunction":
        """The involution F*, realised on the component table."""
        return TestFunction(tuple(
            Component(c.m - c.s, -c.s, c.alpha.conj().scaled(-1.0 if c.s % 2 else 1.0), c.radial)
            for c in self.components))

    def eval_G(self, m: int, z, alpha: float):
        z = np.asarray(z, dtype=complex)
        rho = np.abs(z)
        ang = np.angle(z)
        out = np.zeros(z.shape, dtype=complex)
        for c in self.for_mode(m):
            out = out + c.alpha(alpha) * np.exp(1j * c.s * ang) * c.radial(rho)
        return out if out.ndim else complex(out)

    def eval_F3(self, theta, z, alpha: float):
        """F^3(theta, z, alpha) = sum_m exp(-i m theta) G(m, z, alpha); broadcasting."""
        theta = np.asarray(theta, dtype=float)
        z = np.asarray(z, dtype=complex)
        out = np.zeros(np.broadcast(theta, z).shape, dtype=complex)
        for m in sorted({c.m for c in self.components}):
            out = out + np.exp(-1j * m * theta) * self.eval_G(m, z, alpha)
        return out

    def to_json(self) -> str:
        return json.dumps({"components": [c.to_dict() for c in self.components]},
                          sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TestFunction":
        try:
            doc = json.loads(text)
            comps = doc["components"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError("test_function", f"malformed document ({exc})") from None
        out = []
        for i, d in enumerate(comps):
            try:
                out.append(Component(int(d["m"]), int(d["s"]),
                                     AlphaProfile.from_dict(d.get("alpha_profile", {})),
                                     RadialProfile.from_dict(d.get("radial_profile", {}))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"components[{i}]", str(exc)) from None
        return cls(tuple(out))


def eval_G(F: TestFunction, m: int, z, alpha: float):
    return F.eval_G(m, z, alpha)


def extract_mode(F: TestFunction, m: int, z, alpha: float, n_torus: int = 64):
    """Re-extract G(m, z, alpha) from the reconstructed F^3 with a torus rule."""
    rule = TorusRule(n_torus)
    theta = rule.points
    z = np.asarray(z, dtype=complex)
    vals = F.eval_F3(theta[(...,) + (None,) * z.ndim], z[None, ...], alpha)
    return rule.integrate(np.exp(1j * m * theta)[(...,) + (None,) * z.ndim] * vals, axis=0)


_FOURIER_ORDER = 128


def eval_G_fourier_z(F: TestFunction, m: int, v, order: int = _FOURIER_ORDER):
    """int_C exp(-i Re(v conj z)) G(m, z, 0) dz by brute-force polar quadrature."""
    v = np.asarray(v, dtype=complex)
    comps = F.for_mode(m)
    if not comps:
        return np.zeros(v.shape, dtype=complex) if v.ndim else 0j
    R = max(c.radial.support[1] for c in comps)
    bps = sorted({b for c in comps for b in c.radial.breakpoints()})
    rule = DiskRule.build(R, order, breakpoints=bps)
    gz = F.eval_G(m, rule.nodes, 0.0) * rule.weights
    kernel = np.exp(-1j * np.real(np.multiply.outer(v, np.conj(rule.nodes))))
    out = kernel @ gz
    return out if out.ndim else complex(out)


def char_value(lam: int, F: TestFunction) -> complex:
    """int_C G(-lam, z, 0) dz; only s = 0 components survive the angular integral."""
    total = 0j
    for c in F.for_modes(-lam, 0):
        total += c.alpha(0.0) * radial_moment(0, 0, 0.0, c.radial)
    return total


def _gauss_component(m, s, coef, kind="constant", param=0.0, radius=6.0):
    return Component(m, s, AlphaProfile(kind, coef, param), RadialProfile.gaussian(abs(s), 1.0, radius))


def _hermitian_pair(m, s, coef, kind="constant", param=0.0):
    """A component together with its adjoint partner, so the table is self-adjoint."""
    first = _gauss_component(m, s, coef, kind, param)
    if s == 0:
        # an (m, 0) component is its own partner; Hermitian needs a real coefficient
        return [_gauss_component(m, 0, complex(coef).real, kind, param)]
    partner_coef = (-1.0 if s % 2 else 1.0) * complex(coef).conjugate()
    return [first, _gauss_component(m - s, -s, partner_coef, kind, param)]


def canonical_family(seed: int) -> TestFunction:
    """Reproducible corpus: modes |m| <= 3, |s| <= 2, Gaussian profiles cut at radius 6."""
    seed = int(seed)
    base = [_gauss_component(0, 0, 1.0)]
    if seed == 0:
        return TestFunction(tuple(base))
    if seed == 1:
        comps = base + _hermitian_pair(1, 1, 0.5 + 0.25j) + _hermitian_pair(-1, -1, 0.3 - 0.2j)
        return TestFunction(tuple(comps))
    if seed == 2:
        comps = [_gauss_component(0, 0, 1.0, "linear_ramp", 3.0)]
        comps += _hermitian_pair(2, 2, 0.4 - 0.3j, "linear_ramp", 3.0)
        comps += [_gauss_component(3, 0, 0.4, "gaussian_in_alpha", 2.0)]
        return TestFunction(tuple(comps))

    rng = np.random.default_rng(seed)
    comps = [_gauss_component(0, 0, float(rng.uniform(0.5, 1.5)))]
    for _ in range(int(rng.integers(2, 5))):
        s = int(rng.integers(-2, 3))
        lo, hi = max(-3, -3 + s), min(3, 3 + s)
        m = int(rng.integers(lo, hi + 1))
        coef = complex(rng.normal(), rng.normal()) * 0.5
        kind = ALPHA_KINDS[int(rng.integers(0, 3))]
        param = float(rng.uniform(0.5, 3.0))
        comps += _hermitian_pair(m, s, coef, kind, param)
    return TestFunction(tuple(comps))


def decaying_family(M: int, exponent: float = 4.0) -> TestFunction:
    """Radial components at every torus mode |m| <= M with weight (1+|m|)^-exponent."""
    comps = [_gauss_component(m, 0, (1.0 + abs(m)) ** -exponent) for m in range(-M, M + 1)]
    return TestFunction(tuple(comps))


def mode_l1_norm(F: TestFunction, m: int, alpha: float, panels: int = 16) -> float:
    """||G(m, ., alpha)||_1 on C, bounded above by the triangle inequality over s."""
    total = 0.0
    for c in F.for_mode(m):
        g = c.radial
        total += abs(c.alpha(alpha)) * abs(radial_moment(0, 0, 0.0, _AbsProfile(g), panels))
    return total


@dataclass(frozen=True)
class _AbsProfile:
    g: RadialProfile

    @property
    def support(self):
        return self.g.support

    def breakpoints(self):
        return self.g.breakpoints()

    def __call__(self, rho):
        return np.abs(self.g(rho))


def decay_constant(F: TestFunction, alpha: float = 0.0, power: float = 4.0) -> float:
    """C_F = sup_m (1+|m|)^power ||G(m, ., alpha)||_1."""
    modes = sorted({c.m for c in F.components})
    return max(((1.0 + abs(m)) ** power * mode_l1_norm(F, m, alpha) for m in modes), default=0.0)
