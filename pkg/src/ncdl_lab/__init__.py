"""Numerical companion for norm-controlled dual limits of the Heisenberg motion groups G_n."""

from .errors import (ConfigError, DomainError, InternalError, InvalidInput, IterationLimit, NcdlError,
                     OracleBudgetExceeded, OrderOverflow, QuadratureInconsistency, WindowError)
from .fock import Intertwiner, ModeWindow, OperatorMatrix, conjugate_by_V
from .reps import (Boundary, Character, Generic, matrix_generic, matrix_generic_oracle, matrix_limit,
                   matrix_limit_oracle, spectral_norm)
from .testfn import TestFunction, canonical_family, char_value
from .control import SequenceSpec, defect_experiment, sigma_boundary, sigma_characters
from .orbits import OrbitSequenceSpec, classify_limit, load_spec, orbit_limit_oracle
from .strata import SampledField, check_D1, tensor_control, tensor_stratification

__version__ = "0.1.0"

__all__ = [
    "NcdlError", "OrderOverflow", "InvalidInput", "QuadratureInconsistency", "DomainError", "WindowError",
    "OracleBudgetExceeded", "IterationLimit", "InternalError", "ConfigError",
    "ModeWindow", "OperatorMatrix", "Intertwiner", "conjugate_by_V",
    "Generic", "Boundary", "Character", "matrix_generic", "matrix_generic_oracle", "matrix_limit",
    "matrix_limit_oracle", "spectral_norm",
    "TestFunction", "canonical_family", "char_value",
    "SequenceSpec", "defect_experiment", "sigma_boundary", "sigma_characters",
    "OrbitSequenceSpec", "classify_limit", "load_spec", "orbit_limit_oracle",
    "SampledField", "check_D1", "tensor_control", "tensor_stratification",
]
