"""Certified convergence-rate bounds for finite inhomogeneous continuous-time Markov chains."""

from ctmc.bounds._version import __version__
from ctmc.bounds.certificates import BoundCertificate, Method, Norm, SampledRate
from ctmc.bounds.matrices import DenseMatrixFn, WeightVector, build_A, build_B, build_Bstar
from ctmc.bounds.model import ChainClass, ChainModel, RateFunction, load_model, save_model, validate
from ctmc.bounds.transient import (
    ConvergenceReport,
    Trajectory,
    expected_value,
    find_tstar,
    limiting_regime,
    solve_kolmogorov,
    validate_certificate,
)

__all__ = [
    "BoundCertificate",
    "ChainClass",
    "ChainModel",
    "ConvergenceReport",
    "DenseMatrixFn",
    "Method",
    "Norm",
    "RateFunction",
    "SampledRate",
    "Trajectory",
    "WeightVector",
    "__version__",
    "build_A",
    "build_B",
    "build_Bstar",
    "expected_value",
    "find_tstar",
    "limiting_regime",
    "load_model",
    "save_model",
    "solve_kolmogorov",
    "validate",
    "validate_certificate",
]
