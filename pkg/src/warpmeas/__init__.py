"""Finite-dimensional measurement schemes, warped-convolution deformations and Moyal products."""

from . import deformation, linalg, measurement, moyal, spectral
from .errors import (
    CapacityError,
    ContractViolation,
    DimensionError,
    PeriodizationError,
    SchemaError,
    WarpmeasError,
)

__version__ = "0.1.0"

__all__ = [
    "deformation",
    "linalg",
    "measurement",
    "moyal",
    "spectral",
    "CapacityError",
    "ContractViolation",
    "DimensionError",
    "PeriodizationError",
    "SchemaError",
    "WarpmeasError",
]
