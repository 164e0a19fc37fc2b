import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncdl_lab.errors import ConfigError
from ncdl_lab.orbits import (ALPHA_GRID, BUILTIN_SPECS, R_GRID, GenericOrbit, IntermediateOrbit, LamTerm,
                             OrbitSequenceSpec, PointOrbit, classify_limit, describe, load_spec,
                             orbit_limit_oracle, random_spec)


def test_worked_examples():
    assert classify_limit(load_spec("thm1a")).verdict() == "Generic λ=5 α=1"
    assert classify_limit(load_spec("thm1b")).verdict() == "Intermediate r=1 λ=0"
    L = classify_limit(load_spec("chars"))
    assert L.verdict() == "Point λ=≤3"
    assert L.contains(PointOrbit((3,))) and L.contains(PointOrbit((-40,))) and not L.contains(PointOrbit((4,)))


@pytest.mark.parametrize("name", sorted(BUILTIN_SPECS))
def test_worked_examples_match_oracle(name):
    spec = load_spec(name)
    L = classify_limit(spec)
    assert orbit_limit_oracle(spec, lam_box=6) == L.enumerate(spec.n, 6, R_GRID, ALPHA_GRID)


def test_diverging_alpha_is_empty():
    spec = OrbitSequenceSpec("generic", 1, (LamTerm(2),), 1, alpha_inf=0.0, a=1.0, p=-1.0)
    L = classify_limit(spec)
    assert L.is_empty and L.reason
    assert orbit_limit_oracle(spec) == set()


def test_constant_sequence_is_its_own_limit():
    spec = OrbitSequenceSpec("generic", 1, (LamTerm(-2),), -1, alpha_inf=1.5, a=0.0, p=1.0)
    assert orbit_limit_oracle(spec) == {GenericOrbit((-2,), -1.5)}
    assert classify_limit(spec).verdict() == "Generic λ=-2 α=-1.5"


def test_load_spec_paths(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(BUILTIN_SPECS["thm1b"]))
    assert load_spec(str(p)) == load_spec("thm1b")
    assert load_spec("somewhere/else/thm1b.json") == load_spec("thm1b")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_spec(str(bad))
    with pytest.raises(ConfigError):
        load_spec("no-such-spec")


def test_spec_validation():
    with pytest.raises(ConfigError):
        OrbitSequenceSpec("spiral", 1, (LamTerm(),))
    with pytest.raises(ConfigError):
        OrbitSequenceSpec("generic", 2, (LamTerm(),))
    with pytest.raises(ConfigError):
        OrbitSequenceSpec("generic", 1, (LamTerm(),), alpha_inf=0.0, a=0.0)
    with pytest.raises(ConfigError):
        OrbitSequenceSpec("boundary", 1, (LamTerm(),), support=(), r_inf=(1.0,), b=(0.0,), q=(1.0,))
    with pytest.raises(ConfigError):
        LamTerm(0, 1.0, -1.0)
    with pytest.raises(ConfigError):
        OrbitSequenceSpec.from_dict({"kind": "generic"})


def test_point_types():
    with pytest.raises(ConfigError):
        GenericOrbit((1,), 0.0)
    with pytest.raises(ConfigError):
        IntermediateOrbit((1.0,), (2,))
    assert describe(IntermediateOrbit((1.0, 0.0), (0, 3))) == "Intermediate r=(1, 0) λ=(0, 3)"


def test_boundary_support_pins_lambda():
    spec = OrbitSequenceSpec("boundary", 2, (LamTerm(), LamTerm(2)), 1, support=(0,), r_inf=(1.0, 0.0),
                             b=(0.5, 0.0), q=(1.0, 1.0))
    L = classify_limit(spec)
    assert L.contains(IntermediateOrbit((1.0, 0.0), (0, 2)))


@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_random_specs_agree_with_oracle(seed, n):
    spec = random_spec(np.random.default_rng(seed), n)
    box = 4 if n == 1 else 3
    assert orbit_limit_oracle(spec) == classify_limit(spec).enumerate(n, box, R_GRID, ALPHA_GRID)


@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_spec_json_roundtrip(seed, n):
    spec = random_spec(np.random.default_rng(seed), n)
    assert OrbitSequenceSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec
