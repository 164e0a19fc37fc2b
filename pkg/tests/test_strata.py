import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncdl_lab.errors import DomainError, WindowError
from ncdl_lab.fock import ModeWindow, OperatorMatrix
from ncdl_lab.reps import Boundary, Character, Generic
from ncdl_lab.strata import (SampledField, StratifiedSpectrum, StratumDescriptor, build_field, check_D1,
                             g1_spectrum, restrict_equal_alpha, tensor_control, tensor_stratification,
                             toy_spectrum)
from ncdl_lab.testfn import TestFunction, canonical_family


def test_single_strata_tensor():
    T = tensor_stratification(toy_spectrum(0, "A"), toy_spectrum(0, "B"))
    assert len(T.strata) == 1 and T.step == 0


def test_step_two_by_one_levels():
    T = tensor_stratification(toy_spectrum(2, "A"), toy_spectrum(1, "B"))
    assert T.step == 3
    assert [set(l) for l in T.levels] == [{(0, 0)}, {(1, 0), (0, 1)}, {(2, 0), (1, 1)}, {(2, 1)}]
    # lexicographic inside a level
    assert [s.label for s in T.strata] == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]


def test_g1_squared():
    T = tensor_stratification(g1_spectrum(), g1_spectrum())
    assert len(T.strata) == 9 and len(T.levels) == 5
    assert T.closure_ok()
    s = T.stratum_of((Boundary(1.0), Generic(3, 0.2)))
    assert s.label == (1, 2)
    assert T.stratum_of((Character(0), Character(1))).label == (0, 0)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_associativity(a, b, c):
    A, B, C = toy_spectrum(a, "A"), toy_spectrum(b, "B"), toy_spectrum(c, "C")
    left = tensor_stratification(tensor_stratification(A, B), C)
    right = tensor_stratification(A, tensor_stratification(B, C))
    assert [s.label for s in left.strata] == [s.label for s in right.strata]
    assert left.flat_levels() == right.flat_levels()
    assert left.step == a + b + c and left.closure_ok()


@given(st.integers(0, 3), st.integers(0, 3))
def test_levels_partition_products(a, b):
    T = tensor_stratification(toy_spectrum(a), toy_spectrum(b))
    labels = [x for lvl in T.levels for x in lvl]
    assert sorted(labels) == sorted(itertools.product(range(a + 1), range(b + 1)))


def test_spectrum_guards():
    with pytest.raises(DomainError):
        StratifiedSpectrum(())
    with pytest.raises(DomainError):
        StratifiedSpectrum((StratumDescriptor("x", (1,), (object,)),))


def test_tensor_control_examples():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(3, 3)), rng.normal(size=(2, 2))
    tc = tensor_control(lambda x: x, lambda x: x, [(a, b)], lambda x: np.linalg.norm(x, 2),
                        lambda x: np.linalg.norm(x, 2))
    assert np.array_equal(tc.matrix, np.kron(a, b))
    assert tc.norm <= tc.bound * (1 + 1e-12)
    zero = tensor_control(lambda x: x, lambda x: x, [], None, None, shape=(6, 6))
    assert not zero.matrix.any() and zero.bound == 0
    with pytest.raises(DomainError):
        tensor_control(lambda x: x, lambda x: x, [], None, None)
    with pytest.raises(WindowError):
        tensor_control(lambda x: x, lambda x: x, [(a, b), (b, b)], lambda x: 1, lambda x: 1)


@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_tensor_control_bound(seed, terms):
    rng = np.random.default_rng(seed)
    c = [(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)), rng.normal(size=(4, 4))) for _ in range(terms)]
    nrm = lambda x: np.linalg.norm(x, 2)
    tc = tensor_control(lambda x: x, lambda x: x, c, nrm, nrm)
    assert tc.norm <= tc.bound * (1 + 1e-10)


def test_restrict_equal_alpha_examples():
    assert restrict_equal_alpha((Generic(3, 0.5), Generic(-1, 0.5)))
    assert not restrict_equal_alpha((Generic(3, 0.5), Generic(-1, 0.4)))
    assert restrict_equal_alpha((Boundary(1.0), Character(2)))
    assert not restrict_equal_alpha((Boundary(1.0), Generic(2, 0.3)))


point = st.one_of(st.builds(Generic, st.integers(-5, 5), st.sampled_from([0.5, -0.5, 1.0])),
                  st.builds(Boundary, st.sampled_from([0.5, 1.0])),
                  st.builds(Character, st.integers(-3, 3)))


@given(st.lists(point, min_size=1, max_size=4), st.randoms())
def test_restrict_permutation_invariant(pts, rnd):
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert restrict_equal_alpha(pts) == restrict_equal_alpha(shuffled)


def test_field_serialization_roundtrip(tmp_path):
    fld = build_field(canonical_family(1), J=3)
    fld.save(tmp_path)
    again = SampledField.load(tmp_path)
    assert set(again.values) == set(fld.values)
    for p, v in fld.values.items():
        w = again.get(p)
        if isinstance(v, OperatorMatrix):
            assert np.array_equal(w.entries, v.entries) and w.window == v.window
        else:
            assert w == v
    assert again.roles == fld.roles
    index = json.loads((tmp_path / "index.json").read_text())
    rec = next(r for r in index["points"] if "file" in r)
    raw = (tmp_path / rec["file"]).read_bytes()
    hdr = np.frombuffer(raw[:24], dtype="<i8")
    assert list(hdr) == [2, 7, 7] and len(raw) == 24 + 49 * 16


def test_corrupt_payload(tmp_path):
    fld = SampledField()
    fld.add(Boundary(1.0), OperatorMatrix(ModeWindow(None, 1), np.eye(3)))
    fld.save(tmp_path)
    f = next(tmp_path.glob("*.bin"))
    f.write_bytes(f.read_bytes()[:-16])
    with pytest.raises(DomainError):
        SampledField.load(tmp_path)


@pytest.mark.parametrize("seed", [0, 1, 2, 7])
def test_corpus_field_passes(seed):
    rep = check_D1(build_field(canonical_family(seed)))
    assert rep.passed
    assert all(c.status == "pass" for c in rep.conditions.values())


def _plant(fld, size=0.5):
    line = fld.roles["boundary_line"]
    for r in line[len(line) // 2 + 1:]:
        m = fld.get(Boundary(r))
        e = m.entries.copy()
        e[0, 0] += size
        fld.values[Boundary(r)] = OperatorMatrix(m.window, e, m.side)
    return fld


def test_planted_jump_fails_continuity():
    rep = check_D1(_plant(build_field(canonical_family(0))))
    assert rep.conditions[2].status == "fail" and not rep.passed


def test_zero_field_passes():
    rep = check_D1(build_field(TestFunction()))
    assert rep.passed


def test_sparse_field_is_inconclusive():
    fld = SampledField()
    fld.add(Boundary(1.0), OperatorMatrix(ModeWindow(None, 1), np.diag([0.0, 1.0, 0.0])))
    fld.roles = {"boundary_line": [1.0], "r_grid": [1.0]}
    rep = check_D1(fld)
    assert rep.conditions[2].status == "inconclusive"
    assert rep.conditions[4].status == "inconclusive"
    assert rep.conditions[5].status == "inconclusive"
    assert rep.passed
