"""Norm controls sigma_{r,k}, sigma_{lam_inf,k} and the defect experiments.

The defect at step k is the windowed operator norm of
pi_{lam_k,alpha_k}(F) - sigma_k(F).  Every report carries the explicit
majorant delta_k and a tail estimate for what the window leaves out.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, InternalError, WindowError
from .fock import ModeWindow, OperatorMatrix, conjugate_by_V
from .quad import radial_moments
from .reps import matrix_generic, matrix_limit, spectral_norm
from .testfn import TestFunction, char_value, decay_constant, mode_l1_norm

PLUS_INF = "+inf"
MINUS_INF = "-inf"
ENTRY_TOL = 1e-7


def default_threads() -> int:
    env = os.environ.get("NCDL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("NCDL_THREADS", f"not an integer: {env!r}") from None
    return 1


@dataclass(frozen=True)
class SequenceSpec:
    """Closed-form generator k -> (lam_k, alpha_k).

    to_boundary:   lam_k = round(rate k), alpha_k = r^2/(2 lam_k) (1 + pert k^-p)
    to_characters: lam_k = lam_inf if finite, else round(rate k^growth);
                   alpha_k = a k^-decay
    to_generic:    lam_k = lam, alpha_k = alpha (1 + pert k^-p)
    sign = -1 negates both lam_k and alpha_k (antiholomorphic side).
    """

    kind: str
    k_range: tuple = (1, 20)
    sign: int = 1
    r: float = 1.0
    rate: float = 50.0
    pert: float = 0.0
    p: float = 1.0
    lam_inf: object = 0
    growth: float = 1.0
    a: float = 1.0
    decay: float = 2.0
    lam: int = 1
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("to_boundary", "to_characters", "to_generic"):
            raise ConfigError("kind", f"unknown sequence kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise ConfigError("sign", "must be +1 or -1")
        k0, k1 = self.k_range
        if not (1 <= k0 <= k1):
            raise ConfigError("k_range", f"bad range {self.k_range}")
        if self.kind == "to_boundary" and not (self.r > 0 and self.rate > 0):
            raise ConfigError("r", "boundary sequences need r > 0 and rate > 0")
        if self.kind == "to_characters" and self.lam_inf not in (PLUS_INF, MINUS_INF) \
                and not isinstance(self.lam_inf, (int, np.integer)):
            raise ConfigError("lam_inf", "must be an integer or a +inf/-inf sentinel")
        if self.kind == "to_characters" and self.decay <= 0:
            raise ConfigError("decay", "alpha_k must tend to zero")

    @property
    def ks(self):
        return list(range(self.k_range[0], self.k_range[1] + 1))

    def lam_alpha(self, k: int):
        if self.kind == "to_boundary":
            lam = max(1, int(round(self.rate * k)))
            alpha = self.r ** 2 / (2.0 * lam) * (1.0 + self.pert * k ** (-self.p))
        elif self.kind == "to_characters":
            if self.lam_inf in (PLUS_INF, MINUS_INF):
                lam = max(1, int(round(self.rate * k ** self.growth)))
            else:
                lam = int(self.lam_inf) * self.sign
            alpha = self.a * k ** (-self.decay)
        else:
            lam = int(self.lam)
            alpha = self.alpha * (1.0 + self.pert * k ** (-self.p))
        return self.sign * lam, self.sign * alpha

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "k_range" in d:
            d["k_range"] = tuple(d["k_range"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError("sequence", str(exc)) from None


def window_for(lam: int, J: int | None, sign: int = 1) -> ModeWindow:
    if J is None:
        return ModeWindow.auto(lam, sign)
    return ModeWindow(lam, int(J), sign)


def _clip(A: OperatorMatrix, lam: int, sign: int) -> OperatorMatrix:
    idx = A.window.indices
    keep = sign * idx >= -sign * lam
    return OperatorMatrix(A.window, A.entries * np.outer(keep, keep), A.side)


def sigma_boundary(F: TestFunction, r: float, k: int, spec: SequenceSpec, window: ModeWindow) -> OperatorMatrix:
    """V_k pi_r(F) V_k^* read on the window, with modes below -lam_k cut away."""
    if spec.kind != "to_boundary":
        raise ConfigError("kind", "sigma_boundary needs a to_boundary spec")
    lam, _ = spec.lam_alpha(k)
    if window.lam is not None and window.lam != lam:
        raise WindowError("window does not belong to step k")
    limit_window = ModeWindow(None, window.J)
    base = matrix_limit(F, r, limit_window)
    pos = [limit_window.position(int(j)) for j in window.indices]
    ent = base.entries[np.ix_(pos, pos)]
    if spec.sign < 0:
        # the antiholomorphic intertwiner carries (-i)^j: entries pick up (-1)^(l-j)
        par = np.where(window.indices % 2 == 0, 1.0, -1.0)
        ent = ent * np.outer(par, par)
    out = OperatorMatrix(window, ent)
    return conjugate_by_V(_clip(out, lam, spec.sign), "VAV*")


def sigma_characters(F: TestFunction, lam_inf, sign: int, k: int, window: ModeWindow) -> OperatorMatrix:
    """Diagonal of char_value(j, F) over the modes j with sign*j >= -sign*lam_inf."""
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    idx = window.indices
    if lam_inf == PLUS_INF or lam_inf == MINUS_INF:
        keep = np.ones(idx.size, dtype=bool)
    else:
        keep = sign * idx >= -sign * int(lam_inf)
    diag = np.array([char_value(int(j), F) if kk else 0j for j, kk in zip(idx, keep)])
    return conjugate_by_V(OperatorMatrix(window, np.diag(diag)), "VAV*")


# ----------------------------------------------------------------- majorants

def _weighted_l1(F: TestFunction, m: int, alpha: float, growth: float, diff: bool) -> float:
    """int exp(growth |z|^2) |G(m,z,alpha)| dz (or of G(alpha) - G(0)), via the triangle bound over s."""
    total = 0.0
    for c in F.for_mode(m):
        amp = abs(c.alpha(alpha) - c.alpha(0.0)) if diff else abs(c.alpha(alpha))
        if amp == 0.0:
            continue
        prof = _Weighted(c.radial, growth)
        total += amp * abs(complex(radial_moments([0], 0, 0.0, prof)[0]))
    if not math.isfinite(total):
        raise InternalError("majorant integral is not finite")
    return total


@dataclass(frozen=True)
class _Weighted:
    g: object
    growth: float

    @property
    def support(self):
        return self.g.support

    def breakpoints(self):
        return self.g.breakpoints()

    def __call__(self, rho):
        return np.abs(self.g(rho)) * np.exp(self.growth * np.asarray(rho) ** 2)


def delta_boundary(F: TestFunction, lam: int, alpha: float, r: float) -> float:
    """delta_k = max_j (1+|j|)^4 B_k(j), maximised over F and F*, absolute constant 1.

    B_k(j) = (|lam a/2 - r^2/4| + 2/lam + 2 e a) int e^{(r^2/2+2)|z|^2} |G(-j,z,a)| dz
             + int e^{(r^2/2+2)|z|^2} |G(-j,z,a) - G(-j,z,0)| dz
    """
    lam_a, a = abs(lam), abs(alpha)
    front = abs(lam_a * a / 2.0 - r * r / 4.0) + 2.0 / lam_a + 2.0 * math.e * a
    growth = r * r / 2.0 + 2.0
    best = 0.0
    for G in (F, F.adjoint()):
        for m in sorted({c.m for c in G.components}):
            j = -m
            b = front * _weighted_l1(G, m, alpha, growth, False) + _weighted_l1(G, m, alpha, growth, True)
            best = max(best, (1.0 + abs(j)) ** 4 * b)
    return best


def delta_characters(F: TestFunction, lam: int, alpha: float, J: int) -> float:
    """Majorant for the character regime: omega' = (|lam| + J)|alpha|/2 replaces r^2/4."""
    w = (abs(lam) + J) * abs(alpha) / 2.0
    front = math.sqrt(w) + w + abs(alpha)
    best = 0.0
    for G in (F, F.adjoint()):
        for m in sorted({c.m for c in G.components}):
            b = front * _weighted_l1(G, m, alpha, w + 1.0, False) + _weighted_l1(G, m, alpha, w + 1.0, True)
            best = max(best, (1.0 + abs(m)) ** 4 * b)
    return best


def tail_estimate(F: TestFunction, lam: int, alpha: float, window: ModeWindow) -> float:
    """Sum of ||G(m,.,alpha)||_1 + ||G(m,.,0)||_1 over components whose entry misses the window."""
    total = 0.0
    sign = window.sign
    for c in F.components:
        j, l = -c.m, -c.m + c.s
        admissible = sign * j >= -sign * lam and sign * l >= -sign * lam
        if admissible and not (window.contains(j) and window.contains(l)):
            total += mode_l1_norm(TestFunction((c,)), c.m, alpha) + mode_l1_norm(TestFunction((c,)), c.m, 0.0)
    return total


# ---------------------------------------------------------------- experiment

@dataclass
class DefectRow:
    k: int
    lam: int
    alpha: float
    J: int
    defect: float
    delta_bound: float
    tail: float
    entry_violations: int
    max_entry_ratio: float


@dataclass
class DefectReport:
    spec: dict
    rows: list = field(default_factory=list)

    CSV_COLUMNS = ("k", "lambda", "alpha", "defect", "delta_bound", "tail")

    @property
    def defects(self):
        return [r.defect for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.k, r.lam, repr(r.alpha), repr(r.defect), repr(r.delta_bound), repr(r.tail)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"spec": self.spec, "rows": [asdict(r) for r in self.rows]},
                          sort_keys=True, indent=2)


def _step(F, spec, J, k):
    lam, alpha = spec.lam_alpha(k)
    window = window_for(lam, J, spec.sign)
    A = matrix_generic(F, lam, alpha, window)
    if spec.kind == "to_boundary":
        S = sigma_boundary(F, spec.r, k, spec, window)
        delta = delta_boundary(F, lam, alpha, spec.r)
    elif spec.kind == "to_characters":
        S = sigma_characters(F, spec.lam_inf, spec.sign, k, window)
        delta = delta_characters(F, lam, alpha, window.J)
    else:
        S = matrix_generic(F, spec.lam, spec.alpha, window) if spec.sign > 0 else \
            matrix_generic(F, -spec.lam, -spec.alpha, window)
        delta = 0.0
    D = A.entries - S.entries
    defect = spectral_norm(D)
    idx = window.indices
    core = np.abs(idx) <= math.sqrt(abs(lam))
    weight = np.outer((1.0 + np.abs(idx)) ** 2, (1.0 + np.abs(idx)) ** 2)
    allowed = delta / weight
    sub = np.outer(core, core)
    viol = int(np.sum((np.abs(D) > allowed + ENTRY_TOL) & sub)) if spec.kind != "to_generic" else 0
    ratio = float(np.max(np.where(sub, np.abs(D) / np.maximum(allowed, 1e-300), 0.0))) if delta > 0 else 0.0
    tail = tail_estimate(F, lam, alpha, window)
    vals = (defect, delta, tail)
    if not all(math.isfinite(v) and v >= 0 for v in vals):
        raise InternalError(f"non-finite report values at k={k}: {vals}")
    return DefectRow(k, lam, alpha, window.J, defect, delta, tail, viol, ratio)


def defect_experiment(F: TestFunction, spec: SequenceSpec, J: int | None = None,
                      threads: int | None = None) -> DefectReport:
    """Run the defect sequence; per-k steps are independent and mapped in parallel.

    ``J=None`` selects the automatic window ceil(sqrt|lam_k|).
    """
    for k in spec.ks:
        lam, _ = spec.lam_alpha(k)
        if abs(lam) > 10 ** 6:
            raise ConfigError("k_range", f"lambda_k={lam} exceeds 1e6")
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1:
        rows = [_step(F, spec, J, k) for k in spec.ks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda k: _step(F, spec, J, k), spec.ks))
    return DefectReport(spec.to_dict(), rows)


# ---------------------------------------------------------------------- tail

def tail_bound(F: TestFunction, lam: int, alpha: float) -> float:
    """C_F / sqrt(lam) with C_F = sup_m (1+|m|)^4 ||G(m,.,alpha)||_1."""
    return decay_constant(F, alpha) / math.sqrt(lam)


def tail_experiment(F: TestFunction, lam: int, alpha: float, J_wide: int | None = None) -> float:
    """Windowed norm of pi_{lam,alpha}(F) on the columns sqrt(lam) < |j| <= J_wide.

    Raises InternalError if the value exceeds C_F / sqrt(lam).
    """
    lam = int(lam)
    if lam < 4:
        raise DomainError("tail experiment needs lam >= 4")
    if F.is_zero:
        return 0.0
    M = F.mode_bound[0] + F.mode_bound[1]
    J_wide = max(M, 2 * math.ceil(math.sqrt(lam))) if J_wide is None else int(J_wide)
    window = ModeWindow(lam, J_wide)
    A = matrix_generic(F, lam, alpha, window)
    cols = np.abs(window.indices) > math.sqrt(lam)
    value = spectral_norm(A.entries[:, cols]) if cols.any() else 0.0
    bound = tail_bound(F, lam, alpha)
    if value > bound * (1.0 + 1e-9) + 1e-15:
        raise InternalError(f"tail {value:.3e} exceeds C_F/sqrt(lam) = {bound:.3e}")
    return value
