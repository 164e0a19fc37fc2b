import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncdl_lab.errors import ConfigError, DomainError
from ncdl_lab.quad import disk_quadrature_2d
from ncdl_lab.testfn import (AlphaProfile, Component, RadialProfile, TestFunction, canonical_family, char_value,
                             decay_constant, decaying_family, eval_G, eval_G_fourier_z, extract_mode,
                             mode_l1_norm)
from ncdl_lab.special import bessel_j_series


def test_empty_is_zero():
    F = TestFunction()
    assert F.is_zero and eval_G(F, 0, 1 + 1j, 0.3) == 0
    assert eval_G_fourier_z(F, 0, 1.0) == 0
    assert char_value(0, F) == 0


def test_single_component_value():
    F = TestFunction((Component(1, 0, AlphaProfile(), RadialProfile.gaussian()),))
    assert eval_G(F, 1, 1 + 0j, 0.3) == pytest.approx(math.exp(-1))


def test_seed_zero_base_and_char():
    F = canonical_family(0)
    assert [(c.m, c.s) for c in F.components] == [(0, 0)]
    assert char_value(0, F).real == pytest.approx(math.pi, rel=1e-12)


def test_seed_one_has_hermitian_pair():
    modes = {(c.m, c.s) for c in canonical_family(1).components}
    assert {(1, 1), (0, -1), (-1, -1), (0, 1)} <= modes


def test_seed_two_depends_on_alpha():
    F = canonical_family(2)
    assert eval_G(F, 0, 0.5, 0.0) != eval_G(F, 0, 0.5, 0.3)


@given(st.integers(0, 30))
def test_canonical_family_is_self_adjoint_and_reproducible(seed):
    F = canonical_family(seed)
    assert F == canonical_family(seed)
    key = lambda c: (c.m, c.s, repr(c.radial), c.alpha.kind)
    assert sorted(F.adjoint().components, key=key) == sorted(F.components, key=key)
    m, s = F.mode_bound
    assert m <= 3 + 2 and s <= 2


@given(st.integers(0, 20), st.floats(-2, 2), st.floats(0, 3), st.floats(0, 6.3))
def test_mode_extraction_roundtrip(seed, alpha, rho, phi):
    F = canonical_family(seed)
    z = rho * np.exp(1j * phi)
    for m in {c.m for c in F.components}:
        assert extract_mode(F, m, z, alpha) == pytest.approx(eval_G(F, m, z, alpha), abs=1e-12)


@given(st.integers(0, 10), st.integers(0, 10), st.complex_numbers(max_magnitude=3))
def test_linearity(s1, s2, c):
    F, G = canonical_family(s1), canonical_family(s2)
    z = 0.7 - 0.2j
    for m in range(-3, 4):
        lhs = eval_G(F.scaled(c) + G, m, z, 0.4)
        assert lhs == pytest.approx(c * eval_G(F, m, z, 0.4) + eval_G(G, m, z, 0.4), abs=1e-12)


def test_fourier_at_zero_is_char_integral():
    F = canonical_family(1)
    assert eval_G_fourier_z(F, 0, 0.0) == pytest.approx(char_value(0, F), abs=1e-10)


def test_fourier_s1_angular_dependence():
    F = TestFunction((Component(2, 1, AlphaProfile(), RadialProfile.gaussian(1)),))
    for v in [0.5, 1.0j, -1.2 + 0.3j, 2 * np.exp(0.7j), 0.1, 3.0, -2j, 1 + 1j]:
        got = eval_G_fourier_z(F, 2, v)
        ref = disk_quadrature_2d(lambda z: np.exp(-1j * np.real(v * np.conj(z))) * eval_G(F, 2, z, 0.0), 6.0, 96)
        assert got == pytest.approx(ref, abs=1e-10)
        # e^{i arg v} times a radial Hankel transform: -2 pi i int J_1(|v| rho) g rho drho
        rho = np.linspace(0, 6, 20001)
        h = np.array([bessel_j_series(1, abs(v) * r) for r in rho]) * rho * np.exp(-rho ** 2) * rho
        hank = -2j * math.pi * np.sum((h[1:] + h[:-1]) / 2 * np.diff(rho))
        assert got == pytest.approx(np.exp(1j * np.angle(v)) * hank, abs=1e-6)


def test_json_roundtrip_and_errors():
    F = canonical_family(7)
    assert TestFunction.from_json(F.to_json()) == F
    with pytest.raises(ConfigError):
        TestFunction.from_json("{")
    with pytest.raises(ConfigError):
        TestFunction.from_json('{"components": [{"m": 0}]}')
    with pytest.raises(ConfigError):
        TestFunction.from_json('{"components": [{"m": 0, "s": 0, "alpha_profile": {"kind": "nope"}}]}')


def test_profiles_validate():
    with pytest.raises(DomainError):
        RadialProfile("triangle")
    with pytest.raises(DomainError):
        AlphaProfile("cubic")
    with pytest.raises(DomainError):
        TestFunction((Component(0.5, 0, AlphaProfile(), RadialProfile()),))


def test_bump_is_compactly_supported():
    g = RadialProfile.bump(1.0, 2.0)
    assert g(0.5) == 0 and g(2.5) == 0 and g(1.5) == pytest.approx(1.0)


def test_decaying_family_and_norms():
    F = decaying_family(10)
    assert F.mode_bound[0] == 10
    norms = [mode_l1_norm(F, m, 0.0) for m in range(1, 11)]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert decay_constant(F) > 0
