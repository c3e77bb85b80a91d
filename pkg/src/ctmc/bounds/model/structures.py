"""Module containing the data classes for time-varying chain models."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Union

import numpy as np

from ctmc.bounds._utils.exceptions import InvalidParameterError
from ctmc.bounds._utils.utils import NONNEGATIVITY_POINTS, period_grid

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RateFunction:
    """
    Nonnegative trigonometric polynomial of time with period one.

    ``value(t) = constant + sum_k [s_k sin(2 pi k t) + c_k cos(2 pi k t)]``.
    Harmonics are normalised on construction: duplicate frequencies are
    merged, vanishing ones dropped and the rest sorted by frequency.

    Parameters
    ----------
    constant : float
        Constant term (1/time).
    harmonics : tuple of (int, float, float), optional
        ``(k, sin_coeff, cos_coeff)`` triples with positive integer ``k``.

    Examples
    --------
    >>> f = RateFunction(1.0, ((1, 1.0, 0.0),))
    >>> f(0.25)
    2.0
    >>> f.mean()
    1.0
    >>> RateFunction(5.0).is_constant
    True
    """

    constant: float
    harmonics: tuple[tuple[int, float, float], ...] = ()

    def __post_init__(self) -> None:
        merged: dict[int, list[float]] = {}
        for harmonic in self.harmonics:
            if len(harmonic) != 3:
                raise InvalidParameterError(f"Harmonic {harmonic!r} must be a (k, sin, cos) triple.")
            k, s, c = harmonic
            if int(k) != k or int(k) < 1:
                raise InvalidParameterError(f"Harmonic frequency index must be a positive integer, got {k!r}.")
            acc = merged.setdefault(int(k), [0.0, 0.0])
            acc[0] += float(s)
            acc[1] += float(c)
        normalised = tuple((k, s, c) for k, (s, c) in sorted(merged.items()) if s != 0.0 or c != 0.0)
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "harmonics", normalised)

    @property
    def is_constant(self) -> bool:
        """Whether the function is time-independent."""
        return not self.harmonics

    def __call__(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.value(t)

    def value(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """
        Evaluate the rate at time(s) ``t``.

        Parameters
        ----------
        t : float or np.ndarray
            Time instant(s).

        Returns
        -------
        float or np.ndarray
            Rate value(s), same shape as ``t``.

        Examples
        --------
        >>> RateFunction(2.0, ((1, 1.0, 1.0),)).value(0.0)
        3.0
        """
        tt = np.asarray(t, dtype=float)
        out = np.full(tt.shape, self.constant)
        for k, s, c in self.harmonics:
            out = out + s * np.sin(TWO_PI * k * tt) + c * np.cos(TWO_PI * k * tt)
        return float(out) if out.ndim == 0 else out

    def mean(self) -> float:
        """Mean over one period, i.e. the constant term."""
        return self.constant

    def integral(self, s: float, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """
        Closed-form integral of the rate over ``[s, t]``.

        ``t`` may be an array of upper limits.

        Examples
        --------
        >>> round(RateFunction(2.0, ((1, 1.0, 0.0),)).integral(0.0, 0.5), 12)
        1.318309886184
        """
        tt = np.asarray(t, dtype=float)
        total = self.constant * (tt - s)
        for k, sc, cc in self.harmonics:
            w = TWO_PI * k
            total = total + sc * (np.cos(w * s) - np.cos(w * tt)) / w + cc * (np.sin(w * tt) - np.sin(w * s)) / w
        return float(total) if np.ndim(total) == 0 else total

    def minimum(self, points: int = NONNEGATIVITY_POINTS) -> float:
        """Smallest value on a uniform grid over one period."""
        if self.is_constant:
            return self.constant
        return float(np.min(self.value(period_grid(points))))

    def supremum(self, points: int = NONNEGATIVITY_POINTS) -> float:
        """
        Upper bound of the rate over one period.

        The grid maximum is returned; for a finite harmonic content the
        bound ``|constant| + sum(|s_k| + |c_k|)`` is never exceeded.
        """
        if self.is_constant:
            return self.constant
        return float(np.max(self.value(period_grid(points))))

    def __add__(self, other: object) -> RateFunction:
        if isinstance(other, (int, float)):
            other = RateFunction(float(other))
        if not isinstance(other, RateFunction):
            return NotImplemented
        return RateFunction(self.constant + other.constant, self.harmonics + other.harmonics)

    __radd__ = __add__

    def __sub__(self, other: object) -> RateFunction:
        if isinstance(other, (int, float)):
            other = RateFunction(float(other))
        if not isinstance(other, RateFunction):
            return NotImplemented
        return self + (-1.0) * other

    def __mul__(self, factor: object) -> RateFunction:
        if not isinstance(factor, (int, float)):
            return NotImplemented
        f = float(factor)
        return RateFunction(self.constant * f, tuple((k, s * f, c * f) for k, s, c in self.harmonics))

    __rmul__ = __mul__

    def as_list(self) -> list:
        """
        Serialise to the model-file form ``[c, [k, s, cos], ...]``.

        Examples
        --------
        >>> RateFunction(1.0, ((1, 1.0, 0.0),)).as_list()
        [1.0, [1, 1.0, 0.0]]
        """
        return [self.constant, *[[k, s, c] for k, s, c in self.harmonics]]

    @classmethod
    def from_list(cls, data: Union[float, int, list]) -> RateFunction:
        """
        Build a rate from its model-file form.

        Examples
        --------
        >>> RateFunction.from_list([2, [1, 1, 1]]) == RateFunction(2.0, ((1, 1.0, 1.0),))
        True
        >>> RateFunction.from_list(7).constant
        7.0
        """
        if isinstance(data, (int, float)):
            return cls(float(data))
        if not isinstance(data, (list, tuple)) or not data:
            raise InvalidParameterError(f"A rate must be a number or a non-empty list, got {data!r}.")
        constant, *rest = data
        if not isinstance(constant, (int, float)):
            raise InvalidParameterError(f"Rate constant must be numeric, got {constant!r}.")
        harmonics = []
        for item in rest:
            if not isinstance(item, (list, tuple)) or len(item) != 3:
                raise InvalidParameterError(f"Harmonic {item!r} must be a [k, sin, cos] triple.")
            harmonics.append((item[0], item[1], item[2]))
        return cls(float(constant), tuple(harmonics))


ZERO_RATE = RateFunction(0.0)

RateLike = Union[RateFunction, float, int]


def as_rate(value: RateLike) -> RateFunction:
    """
    Coerce a number or a rate function into a ``RateFunction``.

    Examples
    --------
    >>> as_rate(3).constant
    3.0
    """
    if isinstance(value, RateFunction):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return RateFunction(float(value))
    raise InvalidParameterError(f"Cannot interpret {value!r} as a rate.")


def eval_rate(f: RateFunction, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Evaluate a rate function at time ``t``.

    Examples
    --------
    >>> eval_rate(RateFunction(1.0, ((1, 1.0, 0.0),)), 0.25)
    2.0
    >>> eval_rate(RateFunction(5.0), 123.4)
    5.0
    """
    return f.value(t)


def mean_over_period(f: RateFunction) -> float:
    """
    Mean of a rate function over one period.

    Harmonics integrate to zero, so the constant term is returned.

    Examples
    --------
    >>> mean_over_period(RateFunction(2.0, ((1, 1.0, 1.0),)))
    2.0
    >>> mean_over_period(10 * RateFunction(2.0, ((1, 1.0, 0.0),)))
    20.0
    """
    return f.mean()


class ChainClass(str, Enum):
    """Structural class of the transition intensities."""

    BIRTH_DEATH = "BirthDeath"
    BATCH_ARRIVAL = "BatchArrival"
    BATCH_SERVICE = "BatchService"
    BATCH_BOTH = "BatchBoth"


RATE_FAMILIES = ("birth", "death", "arrival_batch", "service_batch")

FAMILIES_BY_CLASS: dict[ChainClass, tuple[str, ...]] = {
    ChainClass.BIRTH_DEATH: ("birth", "death"),
    ChainClass.BATCH_ARRIVAL: ("arrival_batch", "death"),
    ChainClass.BATCH_SERVICE: ("birth", "service_batch"),
    ChainClass.BATCH_BOTH: ("arrival_batch", "service_batch"),
}


def _freeze(rates: Mapping[int, RateLike]) -> Mapping[int, RateFunction]:
    return MappingProxyType({int(k): as_rate(v) for k, v in sorted(rates.items())})


@dataclass(frozen=True)
class ChainModel:
    """
    Finite inhomogeneous chain on ``{0, ..., S}`` of one structural class.

    Missing keys in a rate family stand for a zero intensity.

    Parameters
    ----------
    chain_class : ChainClass
        Structural class tag.
    S : int
        Highest state.
    birth : Mapping[int, RateFunction]
        ``lambda_i`` for ``i = 0..S-1`` (birth-death and batch-service).
    death : Mapping[int, RateFunction]
        ``mu_i`` for ``i = 1..S`` (birth-death and batch-arrival).
    arrival_batch : Mapping[int, RateFunction]
        ``a_k`` for batch sizes ``k = 1..S``.
    service_batch : Mapping[int, RateFunction]
        ``b_k`` for batch sizes ``k = 1..S``.
    truncation_of_infinite : bool
        Whether ``S`` is a truncation level of a countable model.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> m.chain_class.value, m.S, m.is_homogeneous
    ('BirthDeath', 2, True)
    >>> [(i, j) for i, j, _ in m.transitions()]
    [(0, 1), (1, 2), (1, 0), (2, 1)]
    """

    chain_class: ChainClass
    S: int
    birth: Mapping[int, RateFunction] = field(default_factory=dict)
    death: Mapping[int, RateFunction] = field(default_factory=dict)
    arrival_batch: Mapping[int, RateFunction] = field(default_factory=dict)
    service_batch: Mapping[int, RateFunction] = field(default_factory=dict)
    truncation_of_infinite: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "chain_class", ChainClass(self.chain_class))
        object.__setattr__(self, "S", int(self.S))
        for family in RATE_FAMILIES:
            object.__setattr__(self, family, _freeze(getattr(self, family)))

    def __hash__(self) -> int:
        return hash((self.chain_class, self.S, self.truncation_of_infinite))

    @classmethod
    def birth_death(
        cls,
        S: int,
        birth: Mapping[int, RateLike],
        death: Mapping[int, RateLike],
        truncated: bool = False,
    ) -> ChainModel:
        """Class (i): state-dependent births ``lambda_i`` and deaths ``mu_i``."""
        return cls(ChainClass.BIRTH_DEATH, S, birth=birth, death=death, truncation_of_infinite=truncated)

    @classmethod
    def batch_arrival(
        cls,
        S: int,
        arrivals: Mapping[int, RateLike],
        death: Mapping[int, RateLike],
        truncated: bool = False,
    ) -> ChainModel:
        """Class (ii): state-independent batch arrivals ``a_k``, single services ``mu_i``."""
        return cls(ChainClass.BATCH_ARRIVAL, S, arrival_batch=arrivals, death=death, truncation_of_infinite=truncated)

    @classmethod
    def batch_service(
        cls,
        S: int,
        birth: Mapping[int, RateLike],
        services: Mapping[int, RateLike],
        truncated: bool = False,
    ) -> ChainModel:
        """Class (iii): single arrivals ``lambda_i``, state-independent batch services ``b_k``."""
        return cls(ChainClass.BATCH_SERVICE, S, birth=birth, service_batch=services, truncation_of_infinite=truncated)

    @classmethod
    def batch_both(
        cls,
        S: int,
        arrivals: Mapping[int, RateLike],
        services: Mapping[int, RateLike],
        truncated: bool = False,
    ) -> ChainModel:
        """Class (iv): state-independent batch arrivals ``a_k`` and batch services ``b_k``."""
        return cls(
            ChainClass.BATCH_BOTH, S, arrival_batch=arrivals, service_batch=services, truncation_of_infinite=truncated
        )

    def rate(self, family: str, key: int) -> RateFunction:
        """Rate of ``family`` at ``key``, zero when absent."""
        if family not in RATE_FAMILIES:
            raise InvalidParameterError(f"Unknown rate family {family!r}.")
        return getattr(self, family).get(key, ZERO_RATE)

    def rate_functions(self) -> Iterator[tuple[str, int, RateFunction]]:
        """Iterate over all populated ``(family, key, rate)`` entries."""
        for family in RATE_FAMILIES:
            for key, rate in getattr(self, family).items():
                yield family, key, rate

    @property
    def is_homogeneous(self) -> bool:
        """Whether every intensity is time-independent."""
        return all(rate.is_constant for _, _, rate in self.rate_functions())

    @property
    def is_periodic(self) -> bool:
        """Whether some intensity carries a harmonic (period one)."""
        return not self.is_homogeneous

    def transitions(self) -> Iterator[tuple[int, int, RateFunction]]:
        """
        Iterate over the transitions ``(i, j, q_ij)`` allowed by the class.

        Batch sizes that would leave the state space are not generated:
        an arrival of size ``k`` from ``i`` requires ``i + k <= S`` and a
        service of size ``k`` requires ``k <= i``.
        """
        S = self.S
        for i, rate in self.birth.items():
            if 0 <= i < S:
                yield i, i + 1, rate
        for i, rate in self.death.items():
            if 1 <= i <= S:
                yield i, i - 1, rate
        for k, rate in self.arrival_batch.items():
            for i in range(0, S - k + 1):
                yield i, i + k, rate
        for k, rate in self.service_batch.items():
            for i in range(k, S + 1):
                yield i, i - k, rate

    def outflow_bound(self) -> float:
        """
        Bound ``L`` on the total outflow intensity of any state.

        Examples
        --------
        >>> ChainModel.birth_death(1, birth={0: 2}, death={1: 3}).outflow_bound()
        3.0
        """
        outflow = np.zeros(self.S + 1)
        for i, _, rate in self.transitions():
            outflow[i] += max(rate.supremum(), 0.0)
        return float(outflow.max())
