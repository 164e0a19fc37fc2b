"""Deterministic quadrature rules: torus, compact radial half-lines, polar disks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InvalidInput

MAX_RADIUS = 20.0
PANEL_ORDER = 24


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class RadialRule:
    """Composite Gauss-Legendre rule on [r0, r1] with positive weights."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @classmethod
    def composite(cls, r0: float, r1: float, panels: int, order: int = PANEL_ORDER,
                  breakpoints=()) -> "RadialRule":
        if not (0 <= r0 < r1) or panels < 1 or order < 1:
            raise DomainError(f"bad radial rule request [{r0}, {r1}] x {panels} x {order}")
        cuts = np.linspace(r0, r1, panels + 1)
        extra = [b for b in breakpoints if r0 < b < r1]
        cuts = np.unique(np.concatenate([cuts, extra]))
        x, w = _leggauss(order)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[1:] + cuts[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return cls(nodes, weights, order)

    def integrate(self, values) -> complex:
        return np.dot(self.weights, values)


@dataclass(frozen=True)
class TorusRule:
    """N equispaced points on [0, 2pi), each carrying Haar mass 1/N."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("TorusRule needs at least one point")

    @property
    def points(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def weight(self) -> float:
        return 1.0 / self.n

    def integrate(self, values, axis: int = -1):
        return np.mean(values, axis=axis)


def _profile_rule(g, panels: int, order: int) -> RadialRule:
    r0, r1 = g.support
    if r1 > MAX_RADIUS:
        raise DomainError(f"profile support radius {r1} exceeds {MAX_RADIUS}")
    return RadialRule.composite(r0, r1, panels, order, tuple(g.breakpoints()))


def radial_moments(qs, s: int, a: float, g, panels: int = 16, order: int = PANEL_ORDER) -> np.ndarray:
    """2 pi int rho^(2q+s) exp(-a rho^2) g(rho) rho drho for every q in ``qs``."""
    if a < 0 or not math.isfinite(a):
        raise DomainError(f"Gaussian rate must be finite and >= 0, got {a!r}")
    qs = np.asarray(qs, dtype=int)
    if qs.size and np.min(2 * qs + s) < 0:
        raise DomainError("negative radial power")
    rule = _profile_rule(g, panels, order)
    rho = rule.nodes
    base = rule.weights * np.exp(-a * rho * rho) * g(rho) * rho
    powers = np.power.outer(rho, 2 * qs + s) if qs.size else np.zeros((rho.size, 0))
    return 2.0 * np.pi * (base @ powers)


def radial_moment(q: int, s: int, a: float, g, panels: int = 16, order: int = PANEL_ORDER) -> complex:
    """2 pi int_0^R rho^(2q+s) exp(-a rho^2) g(rho) rho drho on the profile's support."""
    return complex(radial_moments([q], s, a, g, panels, order)[0])


@dataclass(frozen=True)
class DiskRule:
    """Tensor polar rule on |z| <= R: nodes in C with Lebesgue weights."""

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, R: float, order: int, r0: float = 0.0, breakpoints=()) -> "DiskRule":
        panels = max(1, math.ceil(order / 16))
        radial = RadialRule.composite(r0, R, panels, 16, breakpoints)
        torus = TorusRule(2 * order)
        rho, theta = np.meshgrid(radial.nodes, torus.points, indexing="ij")
        nodes = (rho * np.exp(1j * theta)).ravel()
        weights = (np.outer(radial.weights * radial.nodes, np.full(torus.n, 2 * np.pi / torus.n))).ravel()
        return cls(nodes, weights)

    def integrate(self, values):
        values = np.asarray(values)
        if not np.all(np.isfinite(values)):
            raise InvalidInput("non-finite integrand samples")
        return np.tensordot(values, self.weights, axes=([-1], [0]))


def disk_quadrature_2d(f, R: float, order: int) -> complex:
    """Integrate a vectorised f: C -> C over the disk |z| <= R (dx dy measure)."""
    if not (R > 0 and math.isfinite(R)):
        raise DomainError(f"bad disk radius {R!r}")
    rule = DiskRule.build(R, order)
    return complex(rule.integrate(f(rule.nodes)))
