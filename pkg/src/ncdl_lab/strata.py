"""Stratified spectra, their tensor products, Kronecker norm controls, the
equal-alpha restriction to G_n, and the operator-field condition checker."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .control import SequenceSpec, sigma_boundary, sigma_characters
from .errors import ConfigError, DomainError, WindowError
from .fock import ModeWindow, OperatorMatrix
from .reps import Boundary, Character, Generic, matrix_generic, matrix_limit, spectral_norm
from .testfn import TestFunction, char_value


# --------------------------------------------------------------- descriptors

@dataclass(frozen=True)
class StratumDescriptor:
    """A named stratum; ``label`` is a tuple of base indices (one per tensor factor)."""

    name: str
    label: tuple
    kinds: tuple  # accepted point types per factor

    def contains(self, point) -> bool:
        pts = point if isinstance(point, tuple) else (point,)
        return len(pts) == len(self.kinds) and all(isinstance(p, k) for p, k in zip(pts, self.kinds))

    def closure_labels(self):
        """Labels of strata meeting the closure: componentwise smaller or equal."""
        return set(product(*(range(i + 1) for i in self.label)))


@dataclass(frozen=True)
class StratifiedSpectrum:
    """Strata listed in their total order; ``levels[k]`` holds the strata of T_k minus T_{k-1}."""

    strata: tuple

    def __post_init__(self):
        if not self.strata:
            raise DomainError("a spectrum needs at least one stratum")
        if any(x != 0 for x in self.strata[0].label):
            raise DomainError("the first stratum must be the character stratum")

    @property
    def step(self) -> int:
        return max(sum(s.label) for s in self.strata)

    @property
    def levels(self):
        out = [[] for _ in range(self.step + 1)]
        for s in self.strata:
            out[sum(s.label)].append(s.label)
        return [tuple(l) for l in out]

    def position(self, label) -> int:
        for i, s in enumerate(self.strata):
            if s.label == label:
                return i
        raise DomainError(f"no stratum labelled {label}")

    def closure_ok(self) -> bool:
        """Each stratum's closure lies in the union of strata up to its own position."""
        known = {s.label for s in self.strata}
        for i, s in enumerate(self.strata):
            for lab in s.closure_labels():
                if lab in known and self.position(lab) > i:
                    return False
                if lab in known and sum(lab) > sum(s.label):
                    return False
        return True

    def stratum_of(self, point):
        for s in self.strata:
            if s.contains(point):
                return s
        return None

    def flat_levels(self):
        return [frozenset(l) for l in self.levels]


def toy_spectrum(d: int, name: str = "X") -> StratifiedSpectrum:
    return StratifiedSpectrum(tuple(StratumDescriptor(f"{name}{i}", (i,), (object,)) for i in range(d + 1)))


def g1_spectrum() -> StratifiedSpectrum:
    """Characters, then the pi_r, then the generic pi_{lam,alpha}."""
    return StratifiedSpectrum((StratumDescriptor("Γ0", (0,), (Character,)),
                               StratumDescriptor("Γ1", (1,), (Boundary,)),
                               StratumDescriptor("Γ2", (2,), (Generic,))))


def tensor_stratification(A: StratifiedSpectrum, B: StratifiedSpectrum) -> StratifiedSpectrum:
    """Strata Γ^A_i x Γ^B_j ordered by i + j, lexicographically inside a level."""
    pairs = [(a, b) for a in A.strata for b in B.strata]
    pairs.sort(key=lambda ab: (sum(ab[0].label) + sum(ab[1].label), ab[0].label + ab[1].label))
    strata = tuple(StratumDescriptor(f"{a.name}⊗{b.name}", a.label + b.label, a.kinds + b.kinds)
                   for a, b in pairs)
    out = StratifiedSpectrum(strata)
    if not out.closure_ok():
        raise DomainError("tensor stratification violates the closure relations")
    return out


# ----------------------------------------------------------- tensor control

@dataclass
class TensorControl:
    matrix: np.ndarray
    bound: float

    @property
    def norm(self) -> float:
        return spectral_norm(self.matrix)


def _entries(x):
    return x.entries if isinstance(x, OperatorMatrix) else np.atleast_2d(np.asarray(x, dtype=complex))


def tensor_control(sigma_A, sigma_B, c, sup_A, sup_B, beta_A: float = 1.0, beta_B: float = 1.0,
                   shape=None) -> TensorControl:
    """sum_l sigma_A(a_l) (x) sigma_B(b_l) with the bound beta_A beta_B sum_l ||a_l||_inf ||b_l||_inf.

    ``c`` is a sequence of (a_l, b_l) pairs; ``sup_A``/``sup_B`` return the sup
    norms of the Fourier transforms.  An empty ``c`` needs ``shape``.
    """
    total, bound, dims = None, 0.0, None
    for a, b in c:
        ma, mb = _entries(sigma_A(a)), _entries(sigma_B(b))
        if dims is None:
            dims = (ma.shape, mb.shape)
        elif dims != (ma.shape, mb.shape):
            raise WindowError("tensor summands have incompatible windows")
        term = np.kron(ma, mb)
        total = term if total is None else total + term
        bound += beta_A * beta_B * sup_A(a) * sup_B(b)
    if total is None:
        if shape is None:
            raise DomainError("empty tensor needs an explicit shape")
        total = np.zeros(shape, dtype=complex)
    return TensorControl(total, bound)


def tensor_apply(rep_A, rep_B, c) -> np.ndarray:
    """(pi_A (x) pi_B)(c) for c = sum a_l (x) b_l."""
    out = None
    for a, b in c:
        term = np.kron(_entries(rep_A(a)), _entries(rep_B(b)))
        out = term if out is None else out + term
    return out


# ------------------------------------------------------------- restriction

def restrict_equal_alpha(points) -> bool:
    """Whether an n-tuple of G_1 points lies in the image of the dual of G_n."""
    points = tuple(points)
    generic = [p for p in points if isinstance(p, Generic)]
    if not generic:
        return True
    if len(generic) != len(points):
        return False
    a0 = generic[0].alpha
    return all(math.isclose(p.alpha, a0, rel_tol=1e-12, abs_tol=0.0) for p in generic)


# ----------------------------------------------------------- sampled fields

def _key(point) -> str:
    if isinstance(point, Generic):
        return f"generic:{point.lam}:{point.alpha!r}"
    if isinstance(point, Boundary):
        return f"boundary:{point.r!r}"
    return f"character:{point.lam}"


def _point_to_dict(p):
    if isinstance(p, Generic):
        return {"type": "generic", "lam": p.lam, "alpha": p.alpha}
    if isinstance(p, Boundary):
        return {"type": "boundary", "r": p.r}
    return {"type": "character", "lam": p.lam}


def _point_from_dict(d):
    t = d["type"]
    if t == "generic":
        return Generic(int(d["lam"]), float(d["alpha"]))
    if t == "boundary":
        return Boundary(float(d["r"]))
    if t == "character":
        return Character(int(d["lam"]))
    raise ConfigError("type", f"unknown point type {t!r}")


def _window_to_dict(w: ModeWindow):
    return {"lam": w.lam, "J": w.J, "sign": w.sign}


@dataclass
class SampledField:
    """Operator field sampled at finitely many spectrum points.

    ``values`` maps a point to an OperatorMatrix (or a scalar at characters).
    ``roles`` names the sample families used by the field checker:
    ``alpha_lines`` (lam -> ordered alphas), ``r_grid``, ``far`` (ordered chains),
    ``sequences`` (declared convergent sequences with their k-th points).
    """

    values: dict = field(default_factory=dict)
    roles: dict = field(default_factory=dict)

    def add(self, point, value):
        if isinstance(value, OperatorMatrix) and not np.all(np.isfinite(value.entries)):
            raise DomainError("non-finite field value")
        self.values[point] = value

    def get(self, point):
        return self.values[point]

    def sup_norm(self) -> float:
        return max((_norm(v) for v in self.values.values()), default=0.0)

    def save(self, directory: str):
        os.makedirs(directory, exist_ok=True)
        index = []
        for i, (p, v) in enumerate(sorted(self.values.items(), key=lambda kv: _key(kv[0]))):
            rec = {"point": _point_to_dict(p)}
            if isinstance(v, OperatorMatrix):
                fname = f"m{i:05d}.bin"
                _write_matrix(os.path.join(directory, fname), v.entries)
                rec.update(file=fname, window=_window_to_dict(v.window), side=v.side)
            else:
                rec.update(scalar=[complex(v).real, complex(v).imag])
            index.append(rec)
        with open(os.path.join(directory, "index.json"), "w", encoding="utf-8") as fh:
            json.dump({"points": index, "roles": _roles_to_json(self.roles)}, fh, sort_keys=True, indent=2)

    @classmethod
    def load(cls, directory: str) -> "SampledField":
        with open(os.path.join(directory, "index.json"), encoding="utf-8") as fh:
            doc = json.load(fh)
        out = cls(roles=_roles_from_json(doc.get("roles", {})))
        for rec in doc["points"]:
            p = _point_from_dict(rec["point"])
            if "file" in rec:
                w = rec["window"]
                win = ModeWindow(w["lam"], int(w["J"]), int(w["sign"]))
                out.add(p, OperatorMatrix(win, _read_matrix(os.path.join(directory, rec["file"])),
                                          rec.get("side", "torus")))
            else:
                out.add(p, complex(*rec["scalar"]))
        return out


def _write_matrix(path, a):
    a = np.ascontiguousarray(a, dtype="<c16")
    with open(path, "wb") as fh:
        np.asarray([a.ndim, *a.shape], dtype="<i8").tofile(fh)
        a.tofile(fh)


def _read_matrix(path):
    with open(path, "rb") as fh:
        ndim = int(np.fromfile(fh, dtype="<i8", count=1)[0])
        shape = tuple(int(x) for x in np.fromfile(fh, dtype="<i8", count=ndim))
        data = np.fromfile(fh, dtype="<c16")
    if data.size != int(np.prod(shape)):
        raise DomainError(f"{path}: payload does not match header {shape}")
    return data.reshape(shape)


def _roles_to_json(roles):
    out = {}
    for name, val in roles.items():
        if name == "alpha_lines":
            out[name] = {str(k): list(v) for k, v in val.items()}
        elif name == "far":
            out[name] = [[_point_to_dict(p) for p in chain] for chain in val]
        elif name == "sequences":
            out[name] = [{"kind": s["kind"], "spec": s["spec"],
                          "steps": [[k, _point_to_dict(p)] for k, p in s["steps"]]} for s in val]
        else:
            out[name] = val
    return out


def _roles_from_json(doc):
    out = {}
    for name, val in doc.items():
        if name == "alpha_lines":
            out[name] = {int(k): list(v) for k, v in val.items()}
        elif name == "far":
            out[name] = [[_point_from_dict(p) for p in chain] for chain in val]
        elif name == "sequences":
            out[name] = [{"kind": s["kind"], "spec": s["spec"],
                          "steps": [(k, _point_from_dict(p)) for k, p in s["steps"]]} for s in val]
        else:
            out[name] = val
    return out


def _plain(d):
    return json.loads(json.dumps(d))


def _norm(v) -> float:
    if isinstance(v, OperatorMatrix):
        return spectral_norm(v)
    return abs(complex(v))


def build_field(F: TestFunction, J: int = 5, r_grid=None, alpha_line=(10, np.linspace(0.05, 0.5, 19)),
                boundary_r=None, seq_k=range(1, 9)) -> SampledField:
    """Sample every representation of F along the families the field checker needs."""
    fld = SampledField()
    lam_line, alphas = alpha_line
    alphas = [float(a) for a in alphas]
    for a in alphas:
        fld.add(Generic(lam_line, a), matrix_generic(F, lam_line, a, ModeWindow(lam_line, J)))
    boundary_r = list(np.linspace(0.2, 3.0, 29)) if boundary_r is None else list(boundary_r)
    r_grid = [2.0 ** -m for m in range(1, 9)] if r_grid is None else list(r_grid)
    free = ModeWindow(None, J)
    for r in sorted(set(map(float, boundary_r + r_grid))):
        fld.add(Boundary(r), matrix_limit(F, r, free))
    for j in range(-J, J + 1):
        fld.add(Character(j), char_value(j, F))
    far = [[Generic(lam, 1.0) for lam in (10, 100, 1000)],
           [Boundary(r) for r in (3.5, 5.0, 7.0)]]
    for chain in far:
        for p in chain:
            if isinstance(p, Generic):
                fld.add(p, matrix_generic(F, p.lam, p.alpha, ModeWindow(p.lam, J)))
            else:
                fld.add(p, matrix_limit(F, p.r, free))
    sequences = []
    bspec = SequenceSpec("to_boundary", (min(seq_k), max(seq_k)), r=1.0, rate=50.0, pert=1.0, p=1.0)
    steps = []
    for k in seq_k:
        lam, a = bspec.lam_alpha(k)
        p = Generic(lam, a)
        fld.add(p, matrix_generic(F, lam, a, ModeWindow(lam, J)))
        steps.append((k, p))
    fld.add(Boundary(1.0), matrix_limit(F, 1.0, free))
    sequences.append({"kind": "to_boundary", "spec": _plain(bspec.to_dict()), "steps": steps})
    cspec = SequenceSpec("to_characters", (min(seq_k), max(seq_k)), lam_inf=2, a=1.0, decay=2.0)
    steps = []
    for k in seq_k:
        lam, a = cspec.lam_alpha(k)
        p = Generic(lam, a)
        fld.add(p, matrix_generic(F, lam, a, ModeWindow(lam, J)))
        steps.append((k, p))
    sequences.append({"kind": "to_characters", "spec": _plain(cspec.to_dict()), "steps": steps})
    fld.roles = {"alpha_lines": {lam_line: alphas}, "boundary_line": sorted(map(float, boundary_r)),
                 "r_grid": sorted(map(float, r_grid)), "far": far, "sequences": sequences, "J": J}
    return fld


# ------------------------------------------------------------- the checker

@dataclass
class ConditionResult:
    status: str  # pass | fail | inconclusive
    measure: float
    detail: str = ""


@dataclass
class D1Report:
    conditions: dict

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.conditions.values())

    def to_dict(self):
        return {str(k): {"status": v.status, "measure": v.measure, "detail": v.detail}
                for k, v in sorted(self.conditions.items())}


DEFAULT_TOLERANCES = {
    "edge": 1e-8,         # condition 1: relative norm of window-edge rows/columns
    "modulus_ratio": 0.75,  # condition 2: fine modulus <= ratio * coarse modulus ...
    "modulus_abs": 1e-9,    # ... or below this absolute floor
    "far": 2e-2,          # condition 3: relative norm at the far end of each chain
    "r0": 1e-2,           # condition 4: relative distance at the smallest r
    "sequence_ratio": 0.25,  # condition 5: last defect / first defect
}


def _modulus_check(values, tol):
    """Nested-grid modulus of continuity along an ordered sample."""
    if len(values) < 3:
        return ConditionResult("inconclusive", float("nan"), "fewer than 3 samples")
    diffs = [spectral_norm(_entries(b) - _entries(a)) for a, b in zip(values, values[1:])]
    fine = max(diffs)
    coarse = max(spectral_norm(_entries(b) - _entries(a)) for a, b in zip(values[::2], values[2::2]))
    ok = fine <= tol["modulus_abs"] or fine <= tol["modulus_ratio"] * coarse
    return ConditionResult("pass" if ok else "fail", fine, f"fine={fine:.3e} coarse={coarse:.3e}")


def check_D1(fld: SampledField, tolerances=None) -> D1Report:
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    roles = fld.roles
    res = {}
    scale = max(fld.sup_norm(), 1e-300)

    # 1: finite, compact-like (negligible mass at the window edge)
    mats = [v for v in fld.values.values() if isinstance(v, OperatorMatrix)]
    if not mats:
        res[1] = ConditionResult("inconclusive", float("nan"), "no operator samples")
    else:
        worst = 0.0
        for m in mats:
            idx = m.window.indices
            edge = (np.abs(idx) == m.window.J)
            e = m.entries
            worst = max(worst, spectral_norm(e[:, edge]), spectral_norm(e[edge, :]))
        ok = worst <= tol["edge"] * scale or worst == 0.0
        res[1] = ConditionResult("pass" if ok else "fail", worst, "window-edge norm")

    # 2: continuity on strata
    parts = []
    for lam, alphas in roles.get("alpha_lines", {}).items():
        vals = [fld.get(Generic(lam, a)) for a in alphas if Generic(lam, a) in fld.values]
        parts.append(_modulus_check(vals, tol))
    line = [r for r in roles.get("boundary_line", []) if Boundary(r) in fld.values]
    parts.append(_modulus_check([fld.get(Boundary(r)) for r in line], tol))
    res[2] = _combine(parts, "max")

    # 3: vanishing at infinity along the far chains
    chains = roles.get("far", [])
    if not chains:
        res[3] = ConditionResult("inconclusive", float("nan"), "no far samples")
    else:
        worst, ok = 0.0, True
        for chain in chains:
            norms = [_norm(fld.get(p)) for p in chain if p in fld.values]
            if len(norms) < 2:
                continue
            worst = max(worst, norms[-1])
            ok &= norms[-1] <= tol["far"] * scale and all(b <= 1.1 * a + 1e-15 for a, b in zip(norms, norms[1:]))
        res[3] = ConditionResult("pass" if ok else "fail", worst, "last norm in each chain")

    # 4: A(r) -> A(0) = diag of characters as r -> 0
    rs = [r for r in roles.get("r_grid", []) if Boundary(r) in fld.values]
    if len(rs) < 3:
        res[4] = ConditionResult("inconclusive", float("nan"), "fewer than 3 r samples")
    else:
        rs = sorted(rs)
        first = fld.get(Boundary(rs[0]))
        idx = first.window.indices
        if not all(Character(int(j)) in fld.values for j in idx):
            res[4] = ConditionResult("inconclusive", float("nan"), "missing character samples")
        else:
            D = np.diag([complex(fld.get(Character(int(j)))) for j in idx])
            dist = [spectral_norm(fld.get(Boundary(r)).entries - D) for r in rs]
            mono = all(a <= b * 1.001 + 1e-15 for a, b in zip(dist, dist[1:]))
            ok = dist[0] <= tol["r0"] * scale and mono
            res[4] = ConditionResult("pass" if ok else "fail", dist[0], f"at r={rs[0]:g}")

    # 5: sequence defects
    seqs = roles.get("sequences", [])
    if not seqs:
        res[5] = ConditionResult("inconclusive", float("nan"), "no sequences")
    else:
        parts = []
        for s in seqs:
            spec = SequenceSpec.from_dict(s["spec"])
            defects = []
            for k, p in s["steps"]:
                A = fld.get(p)
                if spec.kind == "to_boundary":
                    if Boundary(spec.r) not in fld.values:
                        continue
                    lim = fld.get(Boundary(spec.r))
                    pos = [lim.window.position(int(j)) for j in A.window.indices]
                    S = lim.entries[np.ix_(pos, pos)]
                else:
                    S = np.diag([complex(fld.get(Character(int(j)))) if Character(int(j)) in fld.values else 0j
                                 for j in A.window.indices])
                defects.append(spectral_norm(A.entries - S))
            if len(defects) < 3:
                parts.append(ConditionResult("inconclusive", float("nan"), "short sequence"))
                continue
            ratio = defects[-1] / defects[0] if defects[0] > 0 else 0.0
            ok = defects[0] == 0.0 or ratio <= tol["sequence_ratio"]
            parts.append(ConditionResult("pass" if ok else "fail", ratio, spec.kind))
        res[5] = _combine(parts, "max")
    return D1Report(res)


def _combine(parts, how):
    if not parts:
        return ConditionResult("inconclusive", float("nan"), "no data")
    if any(p.status == "fail" for p in parts):
        status = "fail"
    elif all(p.status == "inconclusive" for p in parts):
        status = "inconclusive"
    else:
        status = "pass"
    vals = [p.measure for p in parts if not math.isnan(p.measure)]
    return ConditionResult(status, max(vals) if vals else float("nan"), "; ".join(p.detail for p in parts))
