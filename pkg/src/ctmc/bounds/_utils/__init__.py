"""Internal utilities for ctmc.bounds package."""

from ctmc.bounds._utils.exceptions import (
    BoundsException,
    HypothesisError,
    InvalidParameterError,
    ModelFileError,
    ModelValidationError,
    NumericalError,
)
from ctmc.bounds._utils.utils import deepcompare, period_grid

__all__ = [
    "BoundsException",
    "HypothesisError",
    "InvalidParameterError",
    "ModelFileError",
    "ModelValidationError",
    "NumericalError",
    "deepcompare",
    "period_grid",
]
