import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncdl_lab.errors import DomainError, WindowError
from ncdl_lab.fock import (Intertwiner, ModeWindow, OperatorMatrix, conjugate_by_V, project_head, project_tail)


@given(st.integers(0, 100), st.integers(0, 40))
def test_window_size(lam, J):
    w = ModeWindow(lam, J)
    assert len(w) == min(J, lam) + J + 1
    assert list(w.indices) == sorted(w.indices)
    assert all(w.position(int(j)) == k for k, j in enumerate(w.indices))


def test_window_errors_and_sign():
    with pytest.raises(WindowError):
        ModeWindow(3, -1)
    with pytest.raises(WindowError):
        ModeWindow(-5, 2)
    w = ModeWindow(2, 4, sign=-1)
    assert list(w.indices) == [-4, -3, -2]
    assert ModeWindow.auto(50).J == 8
    with pytest.raises(WindowError):
        ModeWindow(None, 3).position(7)


def _rand(window, seed):
    rng = np.random.default_rng(seed)
    n = len(window)
    return OperatorMatrix(window, rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


@given(st.integers(1, 40), st.integers(0, 31), st.floats(0.01, 5))
def test_intertwiner_isometry(lam, J, alpha):
    w = ModeWindow(lam, J)
    V = Intertwiner(lam, alpha, w)
    M = np.diag(V.phases)
    eye = np.eye(len(w))
    assert np.array_equal(M.conj().T @ M, eye) and np.array_equal(M @ M.conj().T, eye)
    c = np.arange(len(w)) + 1j
    assert np.array_equal(V.apply_adjoint(V.apply(c)), c)
    assert list(V.fock_indices) == list(w.indices + lam)


def test_intertwiner_guards():
    with pytest.raises(DomainError):
        Intertwiner(3, 0.0, ModeWindow(3, 2))
    with pytest.raises(WindowError):
        Intertwiner(4, 1.0, ModeWindow(3, 2))


@given(st.integers(0, 1000))
def test_conjugation_roundtrip(seed):
    w = ModeWindow(10, 4)
    A = _rand(w, seed)
    B = conjugate_by_V(conjugate_by_V(A, "VAV*"), "V*AV")
    assert np.array_equal(B.entries, A.entries) and B.side == "torus"


def test_conjugation_identity_and_diag():
    w = ModeWindow(5, 3)
    eye = OperatorMatrix(w, np.eye(len(w)))
    assert np.array_equal(conjugate_by_V(eye, "VAV*").entries, np.eye(len(w)))
    d = OperatorMatrix(w, np.diag(np.arange(len(w)) * 1j))
    assert np.array_equal(conjugate_by_V(d, "VAV*").entries, d.entries)
    with pytest.raises(WindowError):
        conjugate_by_V(eye, "VAV*", ModeWindow(5, 2))
    with pytest.raises(WindowError):
        conjugate_by_V(eye, "V*AV")


@given(st.integers(0, 500), st.floats(0, 8))
def test_projections_partition(seed, M):
    w = ModeWindow(6, 5)
    A = _rand(w, seed)
    assert np.array_equal((project_tail(A, w, M) + project_head(A, w, M)).entries, A.entries)


def test_projection_examples():
    w = ModeWindow(6, 5)
    A = _rand(w, 1)
    assert not project_tail(A, w, 5).entries.any()
    t = project_tail(A, w, 0)
    zero = w.position(0)
    assert not t.entries[:, zero].any()
    assert np.array_equal(np.delete(t.entries, zero, 1), np.delete(A.entries, zero, 1))
    with pytest.raises(DomainError):
        project_tail(A, w, -1)


def test_operator_matrix_guards():
    w = ModeWindow(None, 1)
    with pytest.raises(WindowError):
        OperatorMatrix(w, np.zeros((2, 2)))
    with pytest.raises(DomainError):
        OperatorMatrix(w, np.full((3, 3), np.inf))
    with pytest.raises(WindowError):
        OperatorMatrix.zeros(w) + OperatorMatrix.zeros(ModeWindow(None, 2))
