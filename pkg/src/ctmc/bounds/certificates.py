"""Module containing convergence certificates and the rate functions they carry."""

from __future__ import annotations

import dataclasses
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ctmc.bounds._utils.exceptions import InvalidParameterError, ModelFileError
from ctmc.bounds._utils.utils import DEFAULT_PERIOD_POINTS, deepcompare, period_grid
from ctmc.bounds.matrices import WeightVector, transform_T
from ctmc.bounds.model.structures import RateFunction

CERTIFICATE_SCHEMA_VERSION = 1
DOMINANCE_TOLERANCE = 1e-12


class Method(str, Enum):
    """Method that produced a certificate."""

    LOGNORM = "LogNorm"
    LYAPUNOV = "Lyapunov"
    DIFFINEQ = "DiffIneq"


class Norm(str, Enum):
    """Vector norm a certificate is stated in."""

    L1 = "l1"
    L2 = "l2"


@dataclass(frozen=True, eq=False)
class SampledRate:
    """
    Periodic rate known through samples on a uniform grid over one period.

    Values between samples are linearly interpolated and integrals are
    exact for that interpolant (trapezoid rule).

    Parameters
    ----------
    values : np.ndarray
        Samples at ``linspace(0, 1, len(values))``.

    Examples
    --------
    >>> r = SampledRate(np.array([1.0, 3.0, 1.0]))
    >>> r.mean()
    2.0
    >>> r.value(0.25)
    2.0
    >>> r.integral(0.0, 2.0)
    4.0
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise InvalidParameterError("A sampled rate needs at least two samples.")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("Sampled rate values must be finite.")
        object.__setattr__(self, "values", values)

    @property
    def grid(self) -> np.ndarray:
        return period_grid(self.values.size)

    @property
    def is_constant(self) -> bool:
        return bool(np.ptp(self.values) == 0.0)

    def _cumulative(self) -> np.ndarray:
        return cumulative_trapezoid(self.values, self.grid, initial=0.0)

    def __call__(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.value(t)

    def value(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Interpolated value at time(s) ``t``, extended periodically."""
        tt = np.asarray(t, dtype=float)
        out = np.interp(tt - np.floor(tt), self.grid, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def mean(self) -> float:
        """Mean over one period."""
        return float(self._cumulative()[-1])

    def _primitive(self, t: np.ndarray) -> np.ndarray:
        grid = self.grid
        cumulative = self._cumulative()
        periods = np.floor(t)
        x = t - periods
        idx = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, grid.size - 2)
        h = x - grid[idx]
        slope = (self.values[idx + 1] - self.values[idx]) / (grid[idx + 1] - grid[idx])
        v_x = self.values[idx] + slope * h
        return periods * cumulative[-1] + cumulative[idx] + h * (self.values[idx] + v_x) / 2.0

    def integral(self, s: float, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Integral over ``[s, t]``; ``t`` may be an array."""
        tt = np.asarray(t, dtype=float)
        out = self._primitive(np.atleast_1d(tt)) - self._primitive(np.array([float(s)]))
        return float(out[0]) if tt.ndim == 0 else out.reshape(tt.shape)

    def minimum(self) -> float:
        return float(self.values.min())

    def supremum(self) -> float:
        return float(self.values.max())

    def __mul__(self, factor: object) -> SampledRate:
        if not isinstance(factor, (int, float)):
            return NotImplemented
        return SampledRate(self.values * float(factor))

    __rmul__ = __mul__


Rate = Union[RateFunction, SampledRate]


def rate_to_record(rate: Rate) -> dict[str, Any]:
    """
    Serialise a rate.

    Examples
    --------
    >>> rate_to_record(RateFunction(2.0))
    {'kind': 'harmonic', 'coefficients': [2.0]}
    """
    if isinstance(rate, RateFunction):
        return {"kind": "harmonic", "coefficients": rate.as_list()}
    return {"kind": "sampled", "values": [float(v) for v in rate.values]}


def rate_from_record(record: Mapping[str, Any]) -> Rate:
    """Inverse of ``rate_to_record``."""
    kind = record.get("kind")
    if kind == "harmonic":
        return RateFunction.from_list(record["coefficients"])
    if kind == "sampled":
        return SampledRate(np.asarray(record["values"], dtype=float))
    raise ModelFileError(f"unknown rate kind {kind!r}")


def sample_rate(rate: Rate, grid: Optional[np.ndarray] = None) -> np.ndarray:
    """Values of ``rate`` on ``grid`` (default: the period grid)."""
    times = period_grid(DEFAULT_PERIOD_POINTS) if grid is None else np.asarray(grid, dtype=float)
    return np.broadcast_to(np.asarray(rate.value(times), dtype=float), times.shape).copy()


def pointwise_envelope(rates: Sequence[RateFunction], lower: bool = True, points: int = DEFAULT_PERIOD_POINTS) -> Rate:
    """
    Pointwise minimum (or maximum) of trigonometric polynomials.

    The result stays a ``RateFunction`` when one of the inputs dominates
    the others on the whole grid; otherwise it is sampled.

    Examples
    --------
    >>> pointwise_envelope([RateFunction(2.0), RateFunction(1.0, ((1, 0.5, 0.0),))]).constant
    1.0
    >>> env = pointwise_envelope([RateFunction(1.0), RateFunction(1.0, ((1, 0.5, 0.0),))])
    >>> type(env).__name__, env.minimum()
    ('SampledRate', 0.5)
    """
    if not rates:
        raise InvalidParameterError("Envelope of an empty family.")
    if all(r.is_constant for r in rates):
        values = [r.constant for r in rates]
        return RateFunction(min(values) if lower else max(values))
    grid = period_grid(points)
    samples = np.vstack([sample_rate(r, grid) for r in rates])
    envelope = samples.min(axis=0) if lower else samples.max(axis=0)
    for rate, row in zip(rates, samples):
        if np.all(np.abs(row - envelope) <= DOMINANCE_TOLERANCE):
            return rate
    return SampledRate(envelope)


@dataclass(frozen=True, eq=False)
class RatePair:
    """
    Least lower and least upper bounds of the column functionals.

    Parameters
    ----------
    alpha : Rate
        Pointwise minimum over states.
    beta : Rate
        Pointwise maximum over states.
    per_state : tuple of RateFunction
        Column functional of each state.
    """

    alpha: Rate
    beta: Rate
    per_state: tuple[RateFunction, ...]


def conversion_constants(weights: Optional[WeightVector], S: int, norm: Norm) -> tuple[float, float]:
    """
    Operator norms ``C1 = ||D T||`` and ``C2 = ||T^-1 D^-1||``.

    They convert a bound on the weighted coordinates back to the reduced
    probability difference ``y``. Without weights ``D`` is the identity.

    Examples
    --------
    >>> conversion_constants(None, 3, Norm.L1)
    (3.0, 2.0)
    >>> conversion_constants(WeightVector.ones(2), 2, Norm.L1)
    (2.0, 2.0)
    """
    T, T_inv = transform_T(S)
    d = np.ones(S) if weights is None else np.abs(weights.d)
    order: Union[int, float] = 1 if Norm(norm) is Norm.L1 else 2
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        c1 = float(np.linalg.norm(d[:, None] * T, order)) if np.all(np.isfinite(d)) else float("inf")
        c2 = float(np.linalg.norm(T_inv / d[None, :], order)) if np.all(np.isfinite(d)) else float("inf")
    return c1, c2


def _weights_to_record(weights: Optional[WeightVector]) -> Optional[dict[str, Any]]:
    if weights is None:
        return None
    return {"log_magnitude": list(weights.log_magnitude), "signs": list(weights.signs), "signed": weights.signed}


def _weights_from_record(record: Optional[Mapping[str, Any]]) -> Optional[WeightVector]:
    if record is None:
        return None
    return WeightVector.from_log(record["log_magnitude"], record["signs"], bool(record.get("signed", False)))


@dataclass(frozen=True, eq=False)
class BoundCertificate:
    """
    Proven inequality ``||w(t)|| <= C exp(-int_s^t rate) ||w(s)||``.

    ``w = D T y`` where ``y`` is the difference of two solutions restricted
    to states ``1..S``; without weights ``w = T y``.

    Parameters
    ----------
    method : Method
        Producing method.
    rate : RateFunction or SampledRate
        Rate function ``alpha(t)`` (1/time).
    constant : float
        Constant ``C >= 1``.
    norm : Norm
        ``l1`` or ``l2``.
    weights : WeightVector, optional
        Weights of the coordinates, None for plain ``T y``.
    sharp : bool
        Whether the bound is attained.
    valid_from : float
        Start time ``s``.
    lower_rate : Rate, optional
        Rate of the matching lower bound for componentwise nonnegative ``w(s)``.
    conversion : tuple of float
        ``(C1, C2)`` back to the unweighted norm of ``y``.
    model_hash : str
        Digest of the model the certificate was computed for.
    metadata : Mapping
        Method-specific witnesses (JSON-serialisable).

    Examples
    --------
    >>> cert = BoundCertificate(Method.LOGNORM, RateFunction(2.0), 1.0, Norm.L1, None)
    >>> round(cert.bound_factor(1.0), 12) == round(float(np.exp(-2.0)), 12)
    True
    """

    method: Method
    rate: Rate
    constant: float
    norm: Norm
    weights: Optional[WeightVector]
    sharp: bool = False
    valid_from: float = 0.0
    lower_rate: Optional[Rate] = None
    conversion: tuple[float, float] = (1.0, 1.0)
    model_hash: str = ""
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "norm", Norm(self.norm))
        object.__setattr__(self, "constant", float(self.constant))
        if not self.constant >= 1.0 - 1e-12:
            raise InvalidParameterError(f"Certificate constant must be at least 1, got {self.constant}.")
        if self.valid_from < 0:
            raise InvalidParameterError("Certificates start at a nonnegative time.")

    @property
    def mean_rate(self) -> float:
        """Mean of the rate over one period."""
        return self.rate.mean()

    @property
    def is_ergodic(self) -> bool:
        """Whether the integral of the rate diverges (positive mean)."""
        return self.mean_rate > 0.0

    @property
    def plain_constant(self) -> float:
        """Constant of the bound stated for the unweighted norm of ``y``."""
        return self.constant * self.conversion[0] * self.conversion[1]

    def bound_factor(self, t: Union[float, np.ndarray], s: Optional[float] = None) -> Union[float, np.ndarray]:
        """Return ``C exp(-int_s^t rate)``; ``s`` defaults to ``valid_from``."""
        start = self.valid_from if s is None else s
        out = self.constant * np.exp(-np.asarray(self.rate.integral(start, t)))
        return float(out) if np.ndim(out) == 0 else out

    def lower_factor(self, t: Union[float, np.ndarray], s: Optional[float] = None) -> Union[float, np.ndarray]:
        """Return ``exp(-int_s^t lower_rate)`` for nonnegative initial coordinates."""
        if self.lower_rate is None:
            raise InvalidParameterError("Certificate carries no lower-bound rate.")
        start = self.valid_from if s is None else s
        out = np.exp(-np.asarray(self.lower_rate.integral(start, t)))
        return float(out) if np.ndim(out) == 0 else out

    def coordinates(self, y: np.ndarray) -> np.ndarray:
        """
        Certificate coordinates of differences ``y`` (last axis = states ``1..S``).

        Weights are rescaled to a unit maximum, which leaves every ratio of
        norms unchanged.

        Examples
        --------
        >>> cert = BoundCertificate(Method.DIFFINEQ, RateFunction(1.0), 1.0, Norm.L1, None)
        >>> cert.coordinates(np.array([0.0, 0.0, 1.0]))
        array([1., 1., 1.])
        """
        u = np.flip(np.cumsum(np.flip(y, axis=-1), axis=-1), axis=-1)
        if self.weights is None:
            return u
        return u * self.weights.normalized()

    def measure(self, w: np.ndarray) -> np.ndarray:
        """Norm of the certificate coordinates along the last axis."""
        order = 1 if self.norm is Norm.L1 else 2
        return np.linalg.norm(w, ord=order, axis=-1)

    def diameter(self, S: int) -> float:
        """
        Largest certificate norm of ``p - q`` over point masses ``p, q`` on ``0..S``.

        No two laws on ``0..S`` are further apart in the certificate norm.

        Examples
        --------
        >>> cert = BoundCertificate(Method.DIFFINEQ, RateFunction(1.0), 1.0, Norm.L1, None)
        >>> cert.diameter(10)
        10.0
        """
        if S < 1:
            raise InvalidParameterError(f"State space needs S >= 1, got {S}.")
        if self.weights is not None and self.weights.size != S:
            raise InvalidParameterError(f"Certificate has {self.weights.size} weights, not S={S}.")
        points = self.coordinates(np.vstack([np.zeros(S), np.eye(S)]))
        return float(max(np.max(self.measure(points - row)) for row in points))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BoundCertificate):
            return NotImplemented
        return deepcompare(self.to_record(), other.to_record())[0]

    __hash__ = None  # type: ignore[assignment]

    def with_rate(self, rate: Rate) -> BoundCertificate:
        """Copy with another rate function."""
        return dataclasses.replace(self, rate=rate)

    def to_record(self) -> dict[str, Any]:
        """Serialise to a JSON-compatible record."""
        return {
            "schema_version": CERTIFICATE_SCHEMA_VERSION,
            "method": self.method.value,
            "norm": self.norm.value,
            "constant": self.constant,
            "sharp": self.sharp,
            "valid_from": self.valid_from,
            "rate": rate_to_record(self.rate),
            "mean_rate": self.mean_rate,
            "lower_rate": None if self.lower_rate is None else rate_to_record(self.lower_rate),
            "weights": _weights_to_record(self.weights),
            "conversion": list(self.conversion),
            "model_hash": self.model_hash,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> BoundCertificate:
        """
        Rebuild a certificate from ``to_record`` output.

        Raises
        ------
        ModelFileError
            On a schema mismatch or a missing field.
        """
        version = record.get("schema_version")
        if version != CERTIFICATE_SCHEMA_VERSION:
            raise ModelFileError(f"unsupported certificate schema version {version!r}")
        try:
            lower = record.get("lower_rate")
            return cls(
                method=Method(record["method"]),
                rate=rate_from_record(record["rate"]),
                constant=float(record["constant"]),
                norm=Norm(record["norm"]),
                weights=_weights_from_record(record.get("weights")),
                sharp=bool(record.get("sharp", False)),
                valid_from=float(record.get("valid_from", 0.0)),
                lower_rate=None if lower is None else rate_from_record(lower),
                conversion=tuple(float(c) for c in record.get("conversion", (1.0, 1.0))),  # type: ignore[arg-type]
                model_hash=str(record.get("model_hash", "")),
                metadata=dict(record.get("metadata", {})),
            )
        except (KeyError, ValueError, TypeError) as err:
            raise ModelFileError(f"malformed certificate record: {err}") from err
