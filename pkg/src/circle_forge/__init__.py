"""circle-forge: exact counters and circle-method tools for random diophantine equations on thin sets."""

from ._caps import CapExceeded, get_cap, set_cap
from .monomial import (BasisSizeError, CoeffVector, ExperimentParams, ParameterError, build_basis, coeffs,
                       hypothesis_gate)

__all__ = [
    "BasisSizeError",
    "CapExceeded",
    "CoeffVector",
    "ExperimentParams",
    "ParameterError",
    "build_basis",
    "coeffs",
    "get_cap",
    "hypothesis_gate",
    "set_cap",
]

__version__ = "0.1.0"
