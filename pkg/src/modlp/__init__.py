"""Modular l^p diagnostics for finite-dimensional free fields."""

from .core import RealLinear, approximation_numbers, lp_quasinorm, real_lp_quasinorm
from .errors import ContractViolation, InputError, ModlpError
from .subspaces import StandardSubspace, construct_conjugation, tomita_data

__version__ = "0.1.0"

__all__ = [
    "RealLinear",
    "approximation_numbers",
    "lp_quasinorm",
    "real_lp_quasinorm",
    "StandardSubspace",
    "construct_conjugation",
    "tomita_data",
    "ModlpError",
    "InputError",
    "ContractViolation",
]
