"""Module for time-varying intensities and the four structural chain classes."""

from ctmc.bounds.model.io import dumps_model, load_model, loads_model, model_hash, save_model
from ctmc.bounds.model.processing import (
    ensure_valid,
    example_one,
    example_two,
    pure_batch_service,
    uniform_batch_arrival,
    truncation_sweep,
    validate,
)
from ctmc.bounds.model.structures import (
    ChainClass,
    ChainModel,
    RateFunction,
    as_rate,
    eval_rate,
    mean_over_period,
)

__all__ = [
    "ChainClass",
    "ChainModel",
    "RateFunction",
    "as_rate",
    "dumps_model",
    "ensure_valid",
    "eval_rate",
    "example_one",
    "example_two",
    "load_model",
    "loads_model",
    "mean_over_period",
    "model_hash",
    "pure_batch_service",
    "save_model",
    "uniform_batch_arrival",
    "truncation_sweep",
    "validate",
]
