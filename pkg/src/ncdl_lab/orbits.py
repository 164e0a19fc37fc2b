"""Admissible coadjoint orbits of G_n = T^n x| H_n and limits of orbit sequences.

Orbits are tagged Generic (lam, alpha), Intermediate (r, lam) with lam_j = 0
on the support of r, or Point (lam).  Sequences are closed-form generators,
so every limit statement can be decided from the grammar.  A geometric oracle
samples distances from orbit representatives to the k-th orbit and is used to
cross-check the classifier.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import ConfigError, InternalError


# ------------------------------------------------------------------ points

@dataclass(frozen=True)
class GenericOrbit:
    lam: tuple
    alpha: float

    def __post_init__(self):
        if self.alpha == 0:
            raise ConfigError("alpha", "generic orbits need alpha != 0")


@dataclass(frozen=True)
class IntermediateOrbit:
    r: tuple
    lam: tuple

    def __post_init__(self):
        if any(x < 0 for x in self.r) or not any(x > 0 for x in self.r):
            raise ConfigError("r", "intermediate orbits need r >= 0, r != 0")
        if any(l != 0 for x, l in zip(self.r, self.lam) if x > 0):
            raise ConfigError("lam", "lam must vanish on the support of r")


@dataclass(frozen=True)
class PointOrbit:
    lam: tuple


def _fmt(x):
    return f"{x:g}"


def describe(point) -> str:
    one = len(point.lam) == 1
    lam = _fmt(point.lam[0]) if one else "(" + ", ".join(_fmt(v) for v in point.lam) + ")"
    if isinstance(point, GenericOrbit):
        return f"Generic λ={lam} α={_fmt(point.alpha)}"
    if isinstance(point, IntermediateOrbit):
        r = _fmt(point.r[0]) if one else "(" + ", ".join(_fmt(v) for v in point.r) + ")"
        return f"Intermediate r={r} λ={lam}"
    return f"Point λ={lam}"


# ------------------------------------------------------------- limit sets

@dataclass(frozen=True)
class Constraint:
    """Admissible values of one integer coordinate: eq, le, ge or any."""

    op: str
    value: int = 0

    def admits(self, v: int) -> bool:
        return {"eq": v == self.value, "le": v <= self.value,
                "ge": v >= self.value, "any": True}[self.op]

    def text(self) -> str:
        return {"eq": f"{self.value}", "le": f"≤{self.value}", "ge": f"≥{self.value}", "any": "*"}[self.op]


ANY = Constraint("any")


@dataclass(frozen=True)
class Cell:
    kind: str  # generic | intermediate | point
    lam: tuple  # of Constraint
    r: tuple | None = None
    alpha: float | None = None

    def contains(self, pt) -> bool:
        kinds = {GenericOrbit: "generic", IntermediateOrbit: "intermediate", PointOrbit: "point"}
        if kinds[type(pt)] != self.kind or len(pt.lam) != len(self.lam):
            return False
        if not all(c.admits(v) for c, v in zip(self.lam, pt.lam)):
            return False
        if self.kind == "generic":
            return math.isclose(pt.alpha, self.alpha, rel_tol=1e-9, abs_tol=1e-12)
        if self.kind == "intermediate":
            return all(math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12) for a, b in zip(pt.r, self.r))
        return True

    def text(self) -> str:
        one = len(self.lam) == 1
        lam = self.lam[0].text() if one else "(" + ", ".join(c.text() for c in self.lam) + ")"
        if self.kind == "generic":
            return f"Generic λ={lam} α={_fmt(self.alpha)}"
        if self.kind == "intermediate":
            r = _fmt(self.r[0]) if one else "(" + ", ".join(_fmt(v) for v in self.r) + ")"
            return f"Intermediate r={r} λ={lam}"
        return f"Point λ={lam}"


@dataclass(frozen=True)
class LimitSet:
    """Union of cells; an empty union is the EmptyLimit signal and carries a reason."""

    cells: tuple = ()
    reason: str = ""

    @property
    def is_empty(self) -> bool:
        return not self.cells

    def contains(self, pt) -> bool:
        return any(c.contains(pt) for c in self.cells)

    def enumerate(self, n: int, lam_box: int, r_grid, alpha_grid) -> set:
        """All grid points of the set inside |lam_j| <= lam_box."""
        return {p for p in candidate_points(n, lam_box, r_grid, alpha_grid) if self.contains(p)}

    def verdict(self) -> str:
        if self.is_empty:
            return f"EmptyLimit ({self.reason})" if self.reason else "EmptyLimit"
        return "; ".join(c.text() for c in self.cells)

    def to_dict(self):
        return {"empty": self.is_empty, "reason": self.reason, "verdict": self.verdict(),
                "cells": [{"kind": c.kind, "lam": [[k.op, k.value] for k in c.lam],
                           "r": list(c.r) if c.r is not None else None, "alpha": c.alpha}
                          for c in self.cells]}


def EmptyLimit(reason: str) -> LimitSet:
    return LimitSet((), reason)


# ----------------------------------------------------------------- grammar

@dataclass(frozen=True)
class LamTerm:
    """lam^k = d + round(c k^gamma), gamma >= 0."""

    d: int = 0
    c: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError("gamma", "lambda exponents must be >= 0")

    def at(self, k):
        return self.d + int(round(self.c * k ** self.gamma))

    @property
    def constant(self) -> bool:
        return self.c == 0 or self.gamma == 0

    @property
    def limit_const(self) -> int:
        return self.d + int(round(self.c))

    def to_dict(self):
        return {"d": self.d, "c": self.c, "gamma": self.gamma}


@dataclass(frozen=True)
class OrbitSequenceSpec:
    """Either a generic sequence alpha_k = sign (alpha_inf + a k^-p), lam^k_j = LamTerm_j,
    or a boundary sequence on a fixed support I: r^k_j = r_inf_j + b_j k^-q_j (j in I),
    r^k_j = 0 and lam^k_j = LamTerm_j off I, lam^k_j = 0 on I."""

    kind: str
    n: int
    lam: tuple
    sign: int = 1
    alpha_inf: float = 0.0
    a: float = 1.0
    p: float = 1.0
    support: tuple = ()
    r_inf: tuple = ()
    b: tuple = ()
    q: tuple = ()
    k0: int = 1

    def __post_init__(self):
        if self.kind not in ("generic", "boundary"):
            raise ConfigError("kind", f"unknown orbit sequence kind {self.kind!r}")
        if self.n < 1 or len(self.lam) != self.n:
            raise ConfigError("lam", f"need {self.n} lambda terms")
        if self.sign not in (1, -1):
            raise ConfigError("sign", "must be +1 or -1")
        if self.kind == "generic":
            if self.alpha_inf < 0:
                raise ConfigError("alpha_inf", "use sign for the orientation; alpha_inf >= 0")
            if self.alpha_inf == 0 and self.a == 0:
                raise ConfigError("a", "alpha_k would vanish identically")
            if self.alpha_inf == 0 and self.a < 0:
                raise ConfigError("a", "with alpha_inf = 0 the sign is carried by `sign`; need a > 0")
        else:
            I = tuple(sorted(set(self.support)))
            if not I or any(not 0 <= j < self.n for j in I):
                raise ConfigError("support", "boundary sequences need a nonempty support in range")
            object.__setattr__(self, "support", I)
            for name in ("r_inf", "b", "q"):
                if len(getattr(self, name)) != self.n:
                    raise ConfigError(name, f"need {self.n} entries")
            for j in I:
                if self.r_inf[j] < 0:
                    raise ConfigError("r_inf", "radii must be >= 0")
                for k in range(self.k0, self.k0 + 2000):
                    if self.r_at(k)[j] <= 0:
                        raise ConfigError("b", f"r^k_{j} is not positive at k={k}")
                        # support must stay exactly I

    # generic -----------------------------------------------------------
    def alpha_at(self, k):
        return self.sign * (self.alpha_inf + self.a * k ** (-self.p))

    def lam_at(self, k):
        if self.kind == "generic":
            return tuple(t.at(k) for t in self.lam)
        return tuple(0 if j in self.support else t.at(k) for j, t in enumerate(self.lam))

    # boundary ----------------------------------------------------------
    def r_at(self, k):
        return tuple(self.r_inf[j] + self.b[j] * k ** (-self.q[j]) if j in self.support else 0.0
                     for j in range(self.n))

    def to_dict(self):
        d = {"kind": self.kind, "n": self.n, "sign": self.sign, "k0": self.k0,
             "lam": [t.to_dict() for t in self.lam]}
        if self.kind == "generic":
            d.update(alpha_inf=self.alpha_inf, a=self.a, p=self.p)
        else:
            d.update(support=list(self.support), r_inf=list(self.r_inf), b=list(self.b), q=list(self.q))
        return d

    @classmethod
    def from_dict(cls, d) -> "OrbitSequenceSpec":
        try:
            lam = tuple(LamTerm(int(t.get("d", 0)), float(t.get("c", 0.0)), float(t.get("gamma", 0.0)))
                        for t in d["lam"])
            kw = dict(kind=d["kind"], n=int(d.get("n", len(lam))), lam=lam, sign=int(d.get("sign", 1)),
                      k0=int(d.get("k0", 1)))
            if d["kind"] == "generic":
                kw.update(alpha_inf=float(d.get("alpha_inf", 0.0)), a=float(d.get("a", 1.0)),
                          p=float(d.get("p", 1.0)))
            else:
                kw.update(support=tuple(d["support"]), r_inf=tuple(map(float, d["r_inf"])),
                          b=tuple(map(float, d.get("b", [0.0] * len(lam)))),
                          q=tuple(map(float, d.get("q", [1.0] * len(lam)))))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ConfigError("orbit_spec", f"malformed grammar document ({exc})") from None
        return cls(**kw)


BUILTIN_SPECS = {
    "thm1a": {"kind": "generic", "n": 1, "alpha_inf": 1.0, "a": 1.0, "p": 1.0,
              "lam": [{"d": 5, "c": 0, "gamma": 0}]},
    "thm1b": {"kind": "generic", "n": 1, "alpha_inf": 0.0, "a": 1.0, "p": 1.0,
              "lam": [{"d": 0, "c": 0.5, "gamma": 1}]},
    "chars": {"kind": "generic", "n": 1, "alpha_inf": 0.0, "a": 1.0, "p": 2.0,
              "lam": [{"d": 3, "c": 0, "gamma": 0}]},
}


def load_spec(source: str) -> OrbitSequenceSpec:
    """A builtin name (thm1a, thm1b, chars) or a path to a JSON grammar document."""
    name = os.path.splitext(os.path.basename(source))[0]
    if source in BUILTIN_SPECS:
        return OrbitSequenceSpec.from_dict(BUILTIN_SPECS[source])
    if os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            try:
                return OrbitSequenceSpec.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError("spec", f"{source}: {exc}") from None
    if name in BUILTIN_SPECS:
        return OrbitSequenceSpec.from_dict(BUILTIN_SPECS[name])
    raise ConfigError("spec", f"no builtin or file named {source!r}")


# -------------------------------------------------------------- classifier

def _sign_constraint(term: LamTerm, alpha_sign: int):
    """Values lam_j with alpha_k (lam^k_j - lam_j) >= 0 eventually; None if none exist."""
    if term.constant:
        return Constraint("le" if alpha_sign > 0 else "ge", term.limit_const)
    return ANY if alpha_sign * np.sign(term.c) > 0 else None


def _classify_generic(spec: OrbitSequenceSpec) -> LimitSet:
    if spec.p < 0 and spec.a != 0:
        return EmptyLimit("|alpha_k| diverges")
    alpha_lim = spec.sign * (spec.alpha_inf + (spec.a if spec.p == 0 else 0.0))
    if alpha_lim != 0:
        if all(t.constant for t in spec.lam):
            lam = tuple(t.limit_const for t in spec.lam)
            return LimitSet((Cell("generic", tuple(Constraint("eq", v) for v in lam), alpha=alpha_lim),))
        return EmptyLimit("lambda^k unbounded while alpha_k has a nonzero limit")
    alpha_sign = spec.sign
    r, lam = [], []
    for t in spec.lam:
        # alpha_k lam^k ~ sign a c k^(gamma - p)
        growth = 0.0 if t.constant else t.gamma
        if t.constant or growth < spec.p:
            L = 0.0
        elif growth == spec.p:
            L = spec.sign * spec.a * t.c
        else:
            return EmptyLimit("alpha_k lambda^k diverges")
        if L < 0:
            return EmptyLimit("alpha_k lambda^k has a negative limit")
        if L > 0:
            r.append(math.sqrt(2.0 * L))
            lam.append(Constraint("eq", 0))
        else:
            c = _sign_constraint(t, alpha_sign)
            if c is None:
                return EmptyLimit("sign condition alpha_k (lambda^k - lambda) >= 0 fails")
            r.append(0.0)
            lam.append(c)
    if any(x > 0 for x in r):
        return LimitSet((Cell("intermediate", tuple(lam), r=tuple(r)),))
    return LimitSet((Cell("point", tuple(lam)),))


def _classify_boundary(spec: OrbitSequenceSpec) -> LimitSet:
    r, lam = [], []
    for j, t in enumerate(spec.lam):
        if j in spec.support:
            rj = spec.r_inf[j] if spec.q[j] > 0 or spec.b[j] == 0 else spec.r_inf[j] + spec.b[j]
            if spec.q[j] < 0 and spec.b[j] != 0:
                return EmptyLimit("r^k diverges")
            r.append(rj)
            # coordinates whose radius tends to zero become free
            lam.append(Constraint("eq", 0) if rj > 0 else ANY)
        else:
            if not t.constant:
                return EmptyLimit("lambda^k off the support is not eventually constant")
            r.append(0.0)
            lam.append(Constraint("eq", t.limit_const))
    if any(x > 0 for x in r):
        return LimitSet((Cell("intermediate", tuple(lam), r=tuple(r)),))
    return LimitSet((Cell("point", tuple(lam)),))


def classify_limit(spec: OrbitSequenceSpec) -> LimitSet:
    """Limit set of the orbit sequence described by ``spec`` (EmptyLimit when there is none)."""
    out = _classify_generic(spec) if spec.kind == "generic" else _classify_boundary(spec)
    _prefix_sanity(spec, out)
    return out


def _prefix_sanity(spec, out: LimitSet):
    """Cheap consistency check of the symbolic verdict against a far prefix of the sequence."""
    if spec.kind != "generic" or out.is_empty:
        return
    k = 10 ** 6
    a = spec.alpha_at(k)
    cell = out.cells[0]
    if cell.kind == "intermediate":
        for t, rj in zip(spec.lam, cell.r):
            prod_ = a * t.at(k)
            if rj > 0 and abs(prod_ - rj * rj / 2.0) > 1e-2 * max(1.0, rj * rj):
                raise InternalError("classifier verdict inconsistent with the sequence prefix")


# ----------------------------------------------------------------- oracle

R_GRID = tuple(0.5 * i for i in range(0, 7))
ALPHA_GRID = tuple(s * 0.5 * i for i in range(1, 7) for s in (1, -1))


def candidate_points(n: int, lam_box: int, r_grid=R_GRID, alpha_grid=ALPHA_GRID):
    lams = list(product(range(-lam_box, lam_box + 1), repeat=n))
    out = [PointOrbit(l) for l in lams]
    out += [GenericOrbit(l, a) for l in lams for a in alpha_grid]
    for r in product(r_grid, repeat=n):
        if not any(x > 0 for x in r):
            continue
        for l in lams:
            if all(v == 0 for x, v in zip(r, l) if x > 0):
                out.append(IntermediateOrbit(r, l))
    return out


def _cubic_min(B, v, a, s):
    """min over y >= 0 of (B + s y^2/(2a))^2 + (v - y)^2, vectorised."""
    # stationary points solve y^3 + 2a(sB + a) y - 2a^2 v = 0
    P = 2.0 * a * (s * B + a)
    Q = -2.0 * a * a * v
    P = P.astype(complex)
    Q = Q.astype(complex)
    disc = np.sqrt(Q * Q / 4.0 + P ** 3 / 27.0)
    C = np.power(-Q / 2.0 + disc, 1.0 / 3.0)
    C = np.where(np.abs(C) < 1e-300, np.power(-Q / 2.0 - disc, 1.0 / 3.0), C)
    best = (B * B + v * v).astype(float)  # y = 0
    omega = np.exp(2j * np.pi / 3.0)
    for k in range(3):
        Ck = C * omega ** k
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.where(np.abs(Ck) > 1e-300, Ck - P / (3.0 * Ck), 0.0)
        y = np.clip(np.real(y), 0.0, None)
        for _ in range(2):  # Newton polish against cancellation
            f = y ** 3 + P.real * y + Q.real
            df = 3.0 * y * y + P.real
            with np.errstate(divide="ignore", invalid="ignore"):
                y = np.where(np.abs(df) > 1e-300, np.clip(y - f / df, 0.0, None), y)
        val = (B + s * y * y / (2.0 * a)) ** 2 + (v - y) ** 2
        best = np.minimum(best, val)
    return best


def _rep_arrays(cands, n):
    """Representative (U, |u|, x) of every candidate orbit."""
    U = np.array([c.lam for c in cands], dtype=float).reshape(len(cands), n)
    u = np.zeros((len(cands), n))
    x = np.zeros(len(cands))
    for i, c in enumerate(cands):
        if isinstance(c, IntermediateOrbit):
            u[i] = c.r
        elif isinstance(c, GenericOrbit):
            x[i] = c.alpha
    return U, u, x


def _dist_to_orbit(spec, k, U, u, x):
    n = spec.n
    if spec.kind == "generic":
        alpha = spec.alpha_at(k)
        lam = np.array(spec.lam_at(k), dtype=float)
        d2 = (x - alpha) ** 2
        for j in range(n):
            d2 = d2 + _cubic_min(U[:, j] - lam[j], u[:, j], abs(alpha), 1 if alpha > 0 else -1)
        return np.sqrt(d2)
    r = spec.r_at(k)
    lam = spec.lam_at(k)
    d2 = x ** 2
    for j in range(n):
        if r[j] > 0:
            d2 = d2 + (u[:, j] - r[j]) ** 2
        else:
            d2 = d2 + (U[:, j] - lam[j]) ** 2 + u[:, j] ** 2
    return np.sqrt(d2)


ORACLE_TOL = 0.25


def orbit_limit_oracle(spec: OrbitSequenceSpec, k_max: int = 1000, grid: float = ORACLE_TOL,
                       lam_box: int | None = None, r_grid=R_GRID, alpha_grid=ALPHA_GRID) -> set:
    """Candidate orbits whose representative point is within ``grid`` of the k-th orbit for
    every sampled k in [k_max/2, k_max].  Advisory: geometric, grid-limited."""
    if spec.n > 3 or k_max > 1000:
        raise ConfigError("oracle", "oracle supports n <= 3 and k_max <= 1000")
    lam_box = (4 if spec.n == 1 else 3) if lam_box is None else lam_box
    cands = candidate_points(spec.n, lam_box, r_grid, alpha_grid)
    U, u, x = _rep_arrays(cands, spec.n)
    ok = np.ones(len(cands), dtype=bool)
    for k in np.unique(np.linspace(k_max // 2, k_max, 6).astype(int)):
        ok &= _dist_to_orbit(spec, int(k), U, u, x) <= grid
    return {c for c, flag in zip(cands, ok) if flag}


def random_spec(rng: np.random.Generator, n: int) -> OrbitSequenceSpec:
    """A grammar-generated sequence whose limits (if any) sit on the oracle grid.

    Exponents are chosen so that the k-th orbits are within the oracle
    tolerance of their limits by k ~ 500.
    """
    sign = int(rng.choice([1, -1]))
    box = 4 if n == 1 else 3
    roll = rng.random()
    if roll < 0.3:
        r_inf = [0.0] * n
        support = sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
        b, q, lam = [0.0] * n, [1.0] * n, []
        for j in range(n):
            if j in support:
                r_inf[j] = float(rng.choice(R_GRID))
                b[j] = float(rng.choice([0.5, 1.0]))
                q[j] = float(rng.choice([1.0, 2.0]))
                lam.append(LamTerm())
            elif rng.random() < 0.15:
                lam.append(LamTerm(0, float(rng.choice([-1.0, 1.0])), 1.0))
            else:
                lam.append(LamTerm(int(rng.integers(-box + 1, box)), 0.0, 0.0))
        return OrbitSequenceSpec("boundary", n, tuple(lam), sign, support=tuple(support),
                                 r_inf=tuple(r_inf), b=tuple(b), q=tuple(q))
    if roll < 0.45:
        alpha_inf = float(rng.choice([0.5, 1.0, 1.5, 2.0]))
        a = float(rng.choice([-0.25, 0.25, 0.5]))
        p = -1.0 if rng.random() < 0.1 else float(rng.choice([1.0, 2.0]))
        lam = [LamTerm(int(rng.integers(-box + 1, box)), 0.0, 0.0) for _ in range(n)]
        if rng.random() < 0.2:
            lam[0] = LamTerm(0, float(rng.choice([-1.0, 1.0])), 1.0)
        return OrbitSequenceSpec("generic", n, tuple(lam), sign, alpha_inf, a, p)
    p = 2.0 if n > 1 else float(rng.choice([1.0, 2.0]))
    a = float(rng.choice([0.5, 1.0]))
    lam = []
    for _ in range(n):
        kind = rng.choice(["I", "const", "inf", "div"], p=[0.4, 0.35, 0.2, 0.05])
        if kind == "I":
            r = float(rng.choice(R_GRID[1:]))
            lam.append(LamTerm(0, sign * r * r / (2.0 * a), p))
        elif kind == "const":
            lam.append(LamTerm(int(rng.integers(-box + 1, box)), 0.0, 0.0))
        elif kind == "inf":
            # gamma < p keeps alpha*lam -> 0; p/4 gets there fast enough for the grid
            lam.append(LamTerm(0, float(rng.choice([-1.0, 1.0])), p / 4.0))
        else:
            lam.append(LamTerm(0, 1.0, p + 1.0))
    return OrbitSequenceSpec("generic", n, tuple(lam), sign, 0.0, a, p)
