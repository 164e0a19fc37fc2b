import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncdl_lab.errors import DomainError, OracleBudgetExceeded, WindowError
from ncdl_lab.fock import ModeWindow, OperatorMatrix
from ncdl_lab.reps import (Boundary, Character, Generic, generic_entry, matrix_at, matrix_character_diag,
                           matrix_generic, matrix_generic_oracle, matrix_limit, matrix_limit_oracle, spectral_norm)
from ncdl_lab.testfn import TestFunction, canonical_family, char_value

seeds = st.integers(0, 25)


def test_zero_function_gives_zero_matrices():
    F = TestFunction()
    w = ModeWindow(20, 3)
    assert not matrix_generic(F, 20, 0.1, w).entries.any()
    assert not matrix_generic_oracle(F, 20, 0.1, w).entries.any()
    assert not matrix_limit(F, 1.0, ModeWindow(None, 3)).entries.any()
    assert not matrix_limit_oracle(F, 1.0, ModeWindow(None, 3)).entries.any()
    assert spectral_norm(OperatorMatrix.zeros(w)) == 0


@given(seeds, st.integers(1, 400), st.floats(1e-3, 2.0), st.sampled_from([1, -1]))
def test_hermitian_for_self_adjoint_tables(seed, lam, alpha, sign):
    F = canonical_family(seed)
    w = ModeWindow(sign * lam, 4, sign)
    A = matrix_generic(F, sign * lam, sign * alpha, w).entries
    assert np.allclose(A, A.conj().T, atol=1e-10)


@given(seeds, st.floats(0.05, 6.0))
def test_limit_hermitian(seed, r):
    A = matrix_limit(canonical_family(seed), r, ModeWindow(None, 5)).entries
    assert np.allclose(A, A.conj().T, atol=1e-10)


def _non_hermitian(seed):
    F = canonical_family(seed)
    return F.scaled(1 + 0.5j) + canonical_family(seed + 100).scaled(0.3j)


@given(seeds, st.integers(1, 300), st.floats(1e-3, 1.0), st.sampled_from([1, -1]))
def test_adjoint_consistency(seed, lam, alpha, sign):
    F = _non_hermitian(seed)
    w = ModeWindow(sign * lam, 4, sign)
    A = matrix_generic(F, sign * lam, sign * alpha, w).entries
    B = matrix_generic(F.adjoint(), sign * lam, sign * alpha, w).entries
    assert np.allclose(B, A.conj().T, atol=1e-9)


@given(seeds, st.integers(1, 200), st.floats(1e-3, 1.0))
def test_selection_rule(seed, lam, alpha):
    F = canonical_family(seed)
    w = ModeWindow(lam, 5)
    A = matrix_generic(F, lam, alpha, w).entries
    present = {(-c.m + c.s, -c.m) for c in F.components}
    for a, l in enumerate(w.indices):
        for b, j in enumerate(w.indices):
            if (l, j) not in present:
                assert A[a, b] == 0


@given(seeds, st.integers(5, 300), st.floats(0.0, 1.0))
def test_series_and_laguerre_routes_agree(seed, lam, t):
    # lam*alpha/2 <= 2 keeps the alternating series well conditioned
    alpha = 1e-3 + t * 4.0 / lam
    F = canonical_family(seed)
    for c in F.components:
        j, l = -c.m, -c.m + c.s
        if lam + j < 0 or lam + l < 0:
            continue
        a = generic_entry(F, lam, alpha, j, l, route="series")
        b = generic_entry(F, lam, alpha, j, l, route="laguerre")
        assert a == pytest.approx(b, abs=1e-10)


def test_high_omega_closed_form():
    # <pi b_N, b_N> for a pure Gaussian is a Laplace transform of L_N
    a, N = 0.5, 51
    x = 2 / a + 0.5
    exact = 2 * np.pi / a * (x - 1) ** N / x ** (N + 1)
    got = generic_entry(canonical_family(0), N, a, 0, 0)
    assert got == pytest.approx(exact, rel=1e-11)


def test_oracle_small_case():
    F = canonical_family(1)
    w = ModeWindow(10, 3)
    A = matrix_generic(F, 10, 0.3, w).entries
    B = matrix_generic_oracle(F, 10, 0.3, w).entries
    assert np.max(np.abs(A - B)) < 1e-8


def test_oracle_budget_and_domain():
    with pytest.raises(OracleBudgetExceeded):
        matrix_generic_oracle(canonical_family(0), 50, 0.1, ModeWindow(50, 6))
    with pytest.raises(DomainError):
        matrix_generic_oracle(canonical_family(0), -5, -0.1, ModeWindow(-5, 2, -1))


def test_limit_oracle_agreement():
    F = canonical_family(2)
    w = ModeWindow(None, 3)
    assert np.max(np.abs(matrix_limit(F, 0.5, w).entries - matrix_limit_oracle(F, 0.5, w).entries)) < 1e-8


@pytest.mark.parametrize("seed", range(6))
def test_small_r_continuity(seed):
    F = canonical_family(seed)
    w = ModeWindow(None, 5)
    A = matrix_limit(F, 1e-7, w).entries
    assert np.allclose(np.diag(A), matrix_character_diag(F, w), atol=1e-10)


def test_window_checks():
    F = canonical_family(0)
    with pytest.raises(WindowError):
        matrix_generic(F, 5, 0.1, ModeWindow(6, 2))
    with pytest.raises(WindowError):
        matrix_generic(F, -5, -0.1, ModeWindow(-5, 2))
    with pytest.raises(DomainError):
        matrix_generic(F, 5, 0.0, ModeWindow(5, 2))
    with pytest.raises(DomainError):
        matrix_limit(F, 0.0, ModeWindow(None, 2))


def test_points_and_dispatch():
    F = canonical_family(1)
    w = ModeWindow(8, 3)
    assert np.array_equal(matrix_at(F, Generic(8, 0.2), w).entries, matrix_generic(F, 8, 0.2, w).entries)
    assert matrix_at(F, Character(0), w) == char_value(0, F)
    assert matrix_at(F, Boundary(1.0), ModeWindow(None, 2)).entries.shape == (5, 5)
    with pytest.raises(DomainError):
        Generic(1, 0.0)
    with pytest.raises(DomainError):
        Boundary(0.0)


def test_spectral_norm_examples():
    w = ModeWindow(None, 0)
    assert spectral_norm(np.diag([3, -4j])) == pytest.approx(4.0)
    assert spectral_norm(OperatorMatrix(w, [[2j]])) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        spectral_norm(np.array([[np.nan, 0], [0, 1]]))


@given(st.integers(0, 10 ** 6), st.integers(1, 40))
def test_spectral_norm_matches_svd(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert spectral_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-10)


def test_spectral_norm_degenerate_top():
    A = np.diag([1.0, 1.0 - 1e-7, 0.5, 0.1, 0.0])
    assert spectral_norm(A) == pytest.approx(1.0, rel=1e-12)
