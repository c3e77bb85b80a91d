"""Bounding methods: logarithmic norm, quadratic Lyapunov functions and differential inequalities."""

from ctmc.bounds.methods.diffineq import (
    PatternBound,
    SignPattern,
    assemble_certificate,
    batch_service_bound,
    diffineq_bound,
    enumerate_patterns,
    exhaustive_alpha,
    optimize_eps,
    pattern_alpha,
    template_weights,
)
from ctmc.bounds.methods.lognorm import (
    alpha_functions,
    decay_parameter_bound,
    decay_parameter_weights,
    ergodicity_bound,
    log_norm,
    lower_bound,
)
from ctmc.bounds.methods.lyapunov import (
    SquaresDecomposition,
    antisym_offdiag_bound,
    batch_arrival_bound,
    batch_arrival_rate,
    beta_star_eig,
    beta_star_squares,
    birth_death_bound,
    symmetrize_bd,
)

__all__ = [
    "PatternBound",
    "SignPattern",
    "SquaresDecomposition",
    "alpha_functions",
    "antisym_offdiag_bound",
    "assemble_certificate",
    "batch_arrival_bound",
    "batch_arrival_rate",
    "batch_service_bound",
    "beta_star_eig",
    "beta_star_squares",
    "birth_death_bound",
    "decay_parameter_bound",
    "decay_parameter_weights",
    "diffineq_bound",
    "enumerate_patterns",
    "ergodicity_bound",
    "exhaustive_alpha",
    "log_norm",
    "lower_bound",
    "optimize_eps",
    "pattern_alpha",
    "symmetrize_bd",
    "template_weights",
]
