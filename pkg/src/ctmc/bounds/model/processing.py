"""Module containing validation and construction helpers for chain models."""

from __future__ import annotations

import warnings
from collections.abc import Callable, Iterable, Sequence
from typing import TypeVar

import numpy as np
from tqdm import tqdm

from ctmc.bounds._utils.exceptions import InvalidParameterError, ModelValidationError
from ctmc.bounds._utils.utils import NONNEGATIVITY_POINTS
from ctmc.bounds.model.structures import (
    FAMILIES_BY_CLASS,
    RATE_FAMILIES,
    ChainClass,
    ChainModel,
    RateFunction,
)

NEGATIVITY_TOLERANCE = -1e-12

T = TypeVar("T")


def validate(model: ChainModel) -> list[str]:
    """
    Report every violated model invariant.

    Parameters
    ----------
    model : ChainModel
        Model to check.

    Returns
    -------
    list of str
        Violations, empty when the model is valid.

    Examples
    --------
    >>> ok = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> validate(ok)
    []
    >>> validate(ChainModel.birth_death(2, birth={0: 1}, death={1: -1}))
    ['negative intensity: death[1]']
    >>> validate(ChainModel.batch_service(2, birth={0: 1}, services={3: 1}))
    ['batch size exceeds S: service_batch[3]']
    """
    violations: list[str] = []
    if model.S < 1:
        violations.append(f"state space too small: S={model.S}")
    allowed = FAMILIES_BY_CLASS[model.chain_class]
    for family in RATE_FAMILIES:
        if family not in allowed and getattr(model, family):
            violations.append(f"unexpected rate family {family} for class {model.chain_class.value}")
    for family, key, rate in model.rate_functions():
        if family == "birth" and not 0 <= key < model.S:
            violations.append(f"state out of range: birth[{key}]")
        elif family == "death" and not 1 <= key <= model.S:
            violations.append(f"state out of range: death[{key}]")
        elif family in ("arrival_batch", "service_batch"):
            if key < 1:
                violations.append(f"batch size below 1: {family}[{key}]")
            elif key > model.S:
                violations.append(f"batch size exceeds S: {family}[{key}]")
        coefficients = [rate.constant, *[v for _, s, c in rate.harmonics for v in (s, c)]]
        if not np.all(np.isfinite(coefficients)):
            violations.append(f"non-finite intensity: {family}[{key}]")
        elif rate.minimum(NONNEGATIVITY_POINTS) < NEGATIVITY_TOLERANCE:
            violations.append(f"negative intensity: {family}[{key}]")
    return violations


def ensure_valid(model: ChainModel) -> ChainModel:
    """
    Return ``model`` unchanged or raise on the first invalid invariant.

    Raises
    ------
    ModelValidationError
        If ``validate`` reports any violation.
    """
    violations = validate(model)
    if violations:
        raise ModelValidationError(violations)
    if model.truncation_of_infinite:
        warnings.warn(
            f"Model is a truncation of a countable chain; results hold for S={model.S} only.",
            stacklevel=2,
        )
    return model


def example_one(S: int = 199, m: float = 90.0) -> ChainModel:
    """
    Periodic queue with bulk arrivals and single services.

    ``a_1 = 1 + sin 2 pi t``, ``a_k = 2 + sin 2 pi t + cos 2 pi t`` for
    ``k >= 2`` and ``mu_k = m^2 (1 + cos 2 pi t)``.

    Examples
    --------
    >>> model = example_one(S=3, m=2.0)
    >>> model.chain_class.value, sorted(model.arrival_batch)
    ('BatchArrival', [1, 2, 3])
    >>> model.death[1].constant
    4.0
    """
    a1 = RateFunction(1.0, ((1, 1.0, 0.0),))
    ak = RateFunction(2.0, ((1, 1.0, 1.0),))
    mu = (m * m) * RateFunction(1.0, ((1, 0.0, 1.0),))
    arrivals = {1: a1, **{k: ak for k in range(2, S + 1)}}
    return ChainModel.batch_arrival(S, arrivals=arrivals, death={k: mu for k in range(1, S + 1)})


def example_two(S: int = 40, m: float = 1.0) -> ChainModel:
    """
    Periodic queue with single arrivals and a full-batch service.

    ``lambda(t) = 10 (2 + sin 2 pi t)`` and ``b_S = m^-2 (2 + cos 2 pi t)``;
    all smaller batch services vanish.

    Examples
    --------
    >>> model = example_two(S=4)
    >>> model.birth[0].mean(), list(model.service_batch)
    (20.0, [4])
    """
    lam = 10.0 * RateFunction(2.0, ((1, 1.0, 0.0),))
    b = (1.0 / (m * m)) * RateFunction(2.0, ((1, 0.0, 1.0),))
    return ChainModel.batch_service(S, birth={i: lam for i in range(S)}, services={S: b})


def uniform_batch_arrival(S: int, lam: float, mu: Sequence[float]) -> ChainModel:
    """
    Homogeneous pure batch-arrival chain.

    ``q_{k,k+1} = 0``, ``q_{k,k+i} = lam`` for ``i >= 2`` and
    ``q_{k,k-1} = mu_k``.

    Examples
    --------
    >>> model = uniform_batch_arrival(3, 1.0, [1.0, 2.0, 3.0])
    >>> sorted(model.arrival_batch), [model.death[k].constant for k in (1, 2, 3)]
    ([2, 3], [1.0, 2.0, 3.0])
    """
    if len(mu) != S:
        raise InvalidParameterError(f"Expected {S} service intensities, got {len(mu)}.")
    return ChainModel.batch_arrival(
        S,
        arrivals={k: lam for k in range(2, S + 1)},
        death={k: mu[k - 1] for k in range(1, S + 1)},
    )


def pure_batch_service(S: int, lam: RateFunction | float, b: RateFunction | float) -> ChainModel:
    """
    Chain with single arrivals ``lam`` and a single batch service of size ``S``.

    Examples
    --------
    >>> model = pure_batch_service(4, 1.0, 0.5)
    >>> model.rate("service_batch", 4).constant, model.rate("service_batch", 1).constant
    (0.5, 0.0)
    """
    return ChainModel.batch_service(S, birth={i: lam for i in range(S)}, services={S: b})


def truncation_sweep(
    builder: Callable[[int], ChainModel],
    levels: Iterable[int],
    analyse: Callable[[ChainModel], T],
    progress: bool = False,
) -> list[tuple[int, T]]:
    """
    Analyse a countable model at several truncation levels.

    Parameters
    ----------
    builder : callable
        Returns the model truncated at a given ``S``.
    levels : iterable of int
        Truncation levels.
    analyse : callable
        Applied to each truncated model.
    progress : bool, optional
        Show a progress bar, default is False.

    Returns
    -------
    list of (int, Any)
        ``(S, analyse(model))`` pairs in the order of ``levels``.

    Examples
    --------
    >>> sweep = truncation_sweep(lambda S: example_two(S), [2, 3], lambda m: m.S + 1)
    >>> sweep
    [(2, 3), (3, 4)]
    """
    results = []
    for level in tqdm(list(levels), desc="truncation sweep", disable=not progress):
        model = builder(level)
        results.append((level, analyse(model)))
    return results


__all__ = [
    "ChainClass",
    "ensure_valid",
    "example_one",
    "example_two",
    "pure_batch_service",
    "uniform_batch_arrival",
    "truncation_sweep",
    "validate",
]
