"""Torus-mode windows, the implicit intertwiner chi_j -> i^j b_{j+lambda}, tail projections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, WindowError
from .special import i_pow


@dataclass(frozen=True)
class ModeWindow:
    """Index set {j : |j| <= J, sign*j >= -sign*lam}; ``lam=None`` means no lower cut.

    ``sign = -1`` is the window of the antiholomorphic (alpha < 0) model, where
    the admissible torus modes are j <= -lam.
    """

    lam: int | None
    J: int
    sign: int = 1

    def __post_init__(self):
        if self.J < 0:
            raise WindowError(f"window half-width must be >= 0, got {self.J}")
        if self.sign not in (1, -1):
            raise DomainError("window sign must be +1 or -1")
        if not self.indices.size:
            raise WindowError(f"empty window for lambda={self.lam}, J={self.J}, sign={self.sign}")

    @classmethod
    def auto(cls, lam: int, sign: int = 1) -> "ModeWindow":
        return cls(lam, max(1, math.ceil(math.sqrt(abs(lam)))), sign)

    @property
    def indices(self) -> np.ndarray:
        j = np.arange(-self.J, self.J + 1)
        if self.lam is not None:
            j = j[self.sign * j >= -self.sign * self.lam]
        return j

    def __len__(self) -> int:
        return int(self.indices.size)

    def position(self, j: int) -> int:
        idx = self.indices
        k = int(j - idx[0])
        if not (0 <= k < idx.size) or idx[k] != j:
            raise WindowError(f"index {j} not in window")
        return k

    def contains(self, j: int) -> bool:
        idx = self.indices
        return bool(idx[0] <= j <= idx[-1])

    def relabel(self, lam: int | None, sign: int | None = None) -> "ModeWindow":
        return ModeWindow(lam, self.J, self.sign if sign is None else sign)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix with rows l and columns j drawn from ``window``.

    ``side`` records whether the entries are read on the torus basis chi_j or,
    after conjugation by the intertwiner, on the Fock basis.
    """

    window: ModeWindow
    entries: np.ndarray
    side: str = "torus"

    def __post_init__(self):
        n = len(self.window)
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (n, n):
            raise WindowError(f"entries of shape {e.shape} do not match window of size {n}")
        if not np.all(np.isfinite(e)):
            raise DomainError("operator matrix has non-finite entries")
        object.__setattr__(self, "entries", e)

    @classmethod
    def zeros(cls, window: ModeWindow, side: str = "torus") -> "OperatorMatrix":
        n = len(window)
        return cls(window, np.zeros((n, n), dtype=complex), side)

    def entry(self, l: int, j: int) -> complex:
        return complex(self.entries[self.window.position(l), self.window.position(j)])

    @property
    def H(self) -> "OperatorMatrix":
        return OperatorMatrix(self.window, self.entries.conj().T, self.side)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _same_window(self, other)
        return OperatorMatrix(self.window, self.entries - other.entries, self.side)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _same_window(self, other)
        return OperatorMatrix(self.window, self.entries + other.entries, self.side)


def _same_window(a: OperatorMatrix, b: OperatorMatrix):
    if not np.array_equal(a.window.indices, b.window.indices):
        raise WindowError("operator windows differ")


@dataclass(frozen=True)
class Intertwiner:
    """chi_j -> i^j b_{j+lam, alpha}; stored as an index shift and a phase."""

    lam: int
    alpha: float
    window: ModeWindow

    def __post_init__(self):
        if self.alpha <= 0:
            raise DomainError("intertwiner needs alpha > 0")
        if self.window.lam is not None and self.window.lam != self.lam:
            raise WindowError("window was built for a different lambda")
        if self.lam + int(self.window.indices[0]) < 0:
            raise WindowError("window reaches below Fock index 0")

    @property
    def fock_indices(self) -> np.ndarray:
        return self.window.indices + self.lam

    @property
    def phases(self) -> np.ndarray:
        return np.array([i_pow(int(j)) for j in self.window.indices])

    def apply(self, c) -> np.ndarray:
        """Torus coefficients (c_j) -> Fock coefficients at fock_indices."""
        return self.phases * np.asarray(c, dtype=complex)

    def apply_adjoint(self, d) -> np.ndarray:
        """Fock coefficients at fock_indices -> torus coefficients."""
        return np.conj(self.phases) * np.asarray(d, dtype=complex)


def conjugate_by_V(A: OperatorMatrix, direction: str, window: ModeWindow | None = None) -> OperatorMatrix:
    """V A V* (torus -> Fock side) or V* A V (Fock -> torus side).

    With the phase i^(l-j) folded into every matrix-element formula, the
    conjugation acts on entries as the identity and only retags the side.
    """
    if window is not None and not np.array_equal(window.indices, A.window.indices):
        raise WindowError("conjugation window does not match the operator")
    if direction == "VAV*":
        if A.side != "torus":
            raise WindowError("V A V* expects a torus-side operator")
        return OperatorMatrix(A.window, A.entries.copy(), "fock")
    if direction == "V*AV":
        if A.side != "fock":
            raise WindowError("V* A V expects a Fock-side operator")
        return OperatorMatrix(A.window, A.entries.copy(), "torus")
    raise DomainError(f"unknown direction {direction!r}")


def tail_mask(window: ModeWindow, M: float) -> np.ndarray:
    return np.abs(window.indices) > M


def project_tail(A: OperatorMatrix, window: ModeWindow, M: float) -> OperatorMatrix:
    """A o (Id - P_{lam,M}): columns with |j| <= M are zeroed."""
    if M < 0:
        raise DomainError("tail cut M must be >= 0")
    if not np.array_equal(window.indices, A.window.indices):
        raise WindowError("window mismatch")
    keep = tail_mask(window, M)
    return OperatorMatrix(A.window, A.entries * keep[None, :], A.side)


def project_head(A: OperatorMatrix, window: ModeWindow, M: float) -> OperatorMatrix:
    """A o P_{lam,M}: the complement of ``project_tail``."""
    if not np.array_equal(window.indices, A.window.indices):
        raise WindowError("window mismatch")
    keep = ~tail_mask(window, M)
    return OperatorMatrix(A.window, A.entries * keep[None, :], A.side)
