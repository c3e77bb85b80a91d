"""Module for differential-inequality bounds with signed weight templates.

On an interval where the coordinates of ``u = T y`` keep fixed signs, the
norm ``||z|| = sum_j d_j u_j`` with weights of matching signs obeys
``d||z||/dt = sum_j (sum_i d_i b*_ij / d_j) z_j``, so every column sum of
``D B* D^-1`` below ``-alpha_D(t)`` yields the rate ``alpha_D``.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from tqdm import tqdm

from ctmc.bounds._utils.exceptions import HypothesisError, InvalidParameterError
from ctmc.bounds._utils.utils import DEFAULT_PERIOD_POINTS, period_grid
from ctmc.bounds.certificates import (
    BoundCertificate,
    Method,
    Norm,
    Rate,
    SampledRate,
    conversion_constants,
    pointwise_envelope,
    sample_rate,
)
from ctmc.bounds.matrices import DenseMatrixFn, Grid, WeightVector, build_Bstar, weight_conjugate
from ctmc.bounds.model.io import model_hash
from ctmc.bounds.model.structures import TWO_PI, ChainClass, ChainModel, RateFunction

logger = logging.getLogger(__name__)

DEFAULT_EPS = 0.5
EXHAUSTIVE_MAX_S = 15


@dataclass(frozen=True)
class SignPattern:
    """
    Signs of the coordinates ``u_1, ..., u_S`` on an interval.

    Examples
    --------
    >>> p = SignPattern.from_string("++--")
    >>> p.change_points, p.blocks()
    ((2,), [(1, 2), (3, 4)])
    >>> str(p)
    '++--'
    """

    signs: tuple[int, ...]

    def __post_init__(self) -> None:
        signs = tuple(int(s) for s in self.signs)
        if not signs or any(s not in (-1, 1) for s in signs):
            raise InvalidParameterError("A sign pattern is a non-empty sequence of +1/-1.")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_string(cls, text: str) -> SignPattern:
        return cls(tuple(1 if ch == "+" else -1 for ch in text))

    def __str__(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)

    @property
    def size(self) -> int:
        return len(self.signs)

    @property
    def change_points(self) -> tuple[int, ...]:
        """Indices ``k`` (1-based) with a sign flip between ``k`` and ``k + 1``."""
        return tuple(k for k in range(1, self.size) if self.signs[k - 1] != self.signs[k])

    def blocks(self) -> list[tuple[int, int]]:
        """Maximal constant-sign index ranges ``(first, last)``, 1-based."""
        bounds = [0, *self.change_points, self.size]
        return [(bounds[b] + 1, bounds[b + 1]) for b in range(len(bounds) - 1)]


@dataclass(frozen=True, eq=False)
class PatternBound:
    """
    Rate ``alpha_D`` certified on intervals with a given sign pattern.

    Parameters
    ----------
    pattern : SignPattern
        Sign pattern.
    d : WeightVector
        Signed weights used.
    alpha_D : Rate
        ``min_j(-sum_i d_i b*_ij(t) / d_j)``.
    eps : float, optional
        Template parameter, None for the unit template.
    """

    pattern: SignPattern
    d: WeightVector
    alpha_D: Rate
    eps: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ExhaustiveResult:
    """
    Minimum over sign patterns of the best template rate.

    Parameters
    ----------
    alpha_star : Rate
        Pointwise minimum over patterns.
    worst_pattern : SignPattern
        Pattern with the smallest mean rate (first in enumeration order on ties).
    templates : tuple of (SignPattern, float or None)
        Template parameter chosen for each pattern.
    """

    alpha_star: Rate
    worst_pattern: SignPattern
    templates: tuple[tuple[SignPattern, Optional[float]], ...]

    def spread(self, S: int) -> float:
        """Largest ``max|d_i| / min|d_i|`` over the chosen templates."""
        return max(template_spread(eps, S) for _, eps in self.templates)


def _check_eps(eps: float, allow_one: bool = False) -> float:
    upper_ok = eps <= 1.0 if allow_one else eps < 1.0
    if not (0.0 < eps and upper_ok):
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}.")
    return float(eps)


def template_spread(eps: Optional[float], S: int) -> float:
    """
    ``max|d_i| / min|d_i|`` of a template: ``eps^(1-S)``, one for the unit template.

    Examples
    --------
    >>> template_spread(0.5, 5), template_spread(None, 5)
    (16.0, 1.0)
    """
    return 1.0 if eps is None else float(eps ** (1 - S))


def template_weights(pattern: SignPattern, eps: float, S: Optional[int] = None) -> WeightVector:
    """
    Signed epsilon-power weights for a sign pattern.

    Within a constant-sign block ``[a, m]`` the weights are
    ``d_i = sign * eps^(S - m + 1 + i - a)``: the powers restart at every
    sign change and the block ending at ``S`` carries the largest weights.

    Examples
    --------
    >>> template_weights(SignPattern.from_string("+++"), 0.5).d
    array([0.5  , 0.25 , 0.125])
    >>> template_weights(SignPattern.from_string("++--"), 0.5).d
    array([ 0.125 ,  0.0625, -0.5   , -0.25  ])
    """
    eps = _check_eps(eps)
    size = pattern.size if S is None else S
    if size != pattern.size:
        raise InvalidParameterError(f"Pattern has {pattern.size} signs, expected {size}.")
    exponents = np.empty(size)
    for first, last in pattern.blocks():
        for i in range(first, last + 1):
            exponents[i - 1] = size - last + 1 + (i - first)
    return WeightVector.from_log(exponents * np.log(eps), pattern.signs, signed=True)


def unit_template(pattern: SignPattern) -> WeightVector:
    """Weights ``d_i = sign_i``."""
    return WeightVector.from_log([0.0] * pattern.size, pattern.signs, signed=True)


def pattern_alpha(Bstar: DenseMatrixFn, d: WeightVector, grid: Grid = None, eps: Optional[float] = None) -> PatternBound:
    """
    Rate certified for the sign pattern of ``d``.

    Examples
    --------
    >>> m = ChainModel.batch_service(3, birth={0: 1, 1: 1, 2: 1}, services={3: 0.1})
    >>> bound = pattern_alpha(build_Bstar(m), template_weights(SignPattern.from_string("+++"), 0.5))
    >>> round(bound.alpha_D.constant, 12)
    0.5
    """
    points = DEFAULT_PERIOD_POINTS if grid is None else len(grid)
    Bss = weight_conjugate(Bstar, d, allow_signed=True)
    columns = [-1.0 * c for c in Bss.column_sums()]
    return PatternBound(
        pattern=SignPattern(d.signs),
        d=d,
        alpha_D=pointwise_envelope(columns, lower=True, points=points),
        eps=eps,
    )


def enumerate_patterns(S: int) -> Iterator[SignPattern]:
    """
    All sign patterns up to a global flip, in lexicographic order (``+`` first).

    Examples
    --------
    >>> [str(p) for p in enumerate_patterns(3)]
    ['+++', '++-', '+-+', '+--']
    """
    for tail in itertools.product((1, -1), repeat=S - 1):
        yield SignPattern((1, *tail))


def _basis(Bstar: DenseMatrixFn, points: int) -> np.ndarray:
    if Bstar.is_constant:
        return np.ones((1, 1))
    times = period_grid(points)
    columns = [np.ones_like(times)]
    for k, _, _ in Bstar.harmonics:
        columns.extend([np.sin(TWO_PI * k * times), np.cos(TWO_PI * k * times)])
    return np.column_stack(columns)


def exhaustive_alpha(
    Bstar: DenseMatrixFn,
    eps_grid: Sequence[float] = (DEFAULT_EPS,),
    grid: Grid = None,
    progress: bool = False,
) -> ExhaustiveResult:
    """
    Minimum over all sign patterns of the best template rate.

    For each pattern, every ``eps`` of ``eps_grid`` and the unit template are
    tried; the one with the largest mean rate is kept (first on ties). The
    result is the pointwise minimum over patterns.

    Parameters
    ----------
    Bstar : DenseMatrixFn
        Matrix ``B*(t)`` of size ``S <= 15``.
    eps_grid : sequence of float, optional
        Template parameters, default ``(0.5,)``.
    grid : array_like, optional
        Its length sets the number of period samples.
    progress : bool, optional
        Show a progress bar, default is False.

    Raises
    ------
    InvalidParameterError
        If ``S > 15`` or an ``eps`` is outside ``(0, 1)``.

    Examples
    --------
    >>> m = ChainModel.batch_service(3, birth={0: 2, 1: 2, 2: 2}, services={3: 0.1})
    >>> result = exhaustive_alpha(build_Bstar(m), eps_grid=[0.5])
    >>> round(result.alpha_star.constant, 12), str(result.worst_pattern)
    (1.0, '+++')
    """
    S = Bstar.dim
    if S > EXHAUSTIVE_MAX_S:
        raise InvalidParameterError(f"Exhaustive enumeration is limited to S <= {EXHAUSTIVE_MAX_S}, got {S}.")
    eps_values = [_check_eps(e) for e in eps_grid]
    points = DEFAULT_PERIOD_POINTS if grid is None else len(grid)
    coefficients = np.stack(list(Bstar.coefficients()))
    basis = _basis(Bstar, points)
    envelope: Optional[np.ndarray] = None
    worst: Optional[tuple[float, SignPattern]] = None
    templates: list[tuple[SignPattern, Optional[float]]] = []
    patterns = enumerate_patterns(S)
    for pattern in tqdm(patterns, total=2 ** (S - 1), desc="sign patterns", disable=not progress):
        candidates: list[tuple[Optional[float], WeightVector]] = [
            (e, template_weights(pattern, e)) for e in eps_values
        ]
        candidates.append((None, unit_template(pattern)))
        best: Optional[tuple[float, Optional[float], np.ndarray]] = None
        for eps, d in candidates:
            values = d.d
            sums = np.einsum("i,kij->kj", values, coefficients) / values
            alpha = -(basis @ sums).max(axis=1)
            score = float(alpha.mean()) if alpha.size == 1 else float(alpha[:-1].mean())
            if best is None or score > best[0]:
                best = (score, eps, alpha)
        assert best is not None
        templates.append((pattern, best[1]))
        envelope = best[2] if envelope is None else np.minimum(envelope, best[2])
        if worst is None or best[0] < worst[0]:
            worst = (best[0], pattern)
    assert envelope is not None and worst is not None
    logger.debug("exhaustive search over %d patterns, worst %s", len(templates), worst[1])
    alpha_star: Rate = RateFunction(float(envelope[0])) if envelope.size == 1 else SampledRate(envelope)
    return ExhaustiveResult(alpha_star=alpha_star, worst_pattern=worst[1], templates=tuple(templates))


def assemble_certificate(
    alpha_star: Rate,
    eps: float,
    S: int,
    result: Optional[ExhaustiveResult] = None,
    model: Optional[ChainModel] = None,
) -> BoundCertificate:
    """
    Plain l1 certificate ``||u(t)|| <= C exp(-int alpha*) ||u(0)||``.

    ``C`` is the largest weight spread of the templates used; without an
    exhaustive result it is ``eps^(1-S)``.

    Examples
    --------
    >>> assemble_certificate(RateFunction(1.0), 0.5, 5).constant
    16.0
    >>> assemble_certificate(RateFunction(1.0), 1.0, 5).constant
    1.0
    """
    eps = _check_eps(eps, allow_one=True)
    constant = result.spread(S) if result is not None else float(eps ** (1 - S))
    metadata: dict[str, Any] = {"eps": eps}
    if result is not None:
        metadata["worst_pattern"] = str(result.worst_pattern)
        metadata["patterns"] = len(result.templates)
    return BoundCertificate(
        method=Method.DIFFINEQ,
        rate=alpha_star,
        constant=constant,
        norm=Norm.L1,
        weights=None,
        sharp=False,
        conversion=conversion_constants(None, S, Norm.L1),
        model_hash=model_hash(model) if model is not None else "",
        metadata=metadata,
    )


def _single_arrival_rate(model: ChainModel) -> RateFunction:
    rates = [model.rate("birth", i) for i in range(model.S)]
    if any(r != rates[0] for r in rates):
        raise HypothesisError("Arrival intensity must not depend on the state.")
    return rates[0]


def batch_service_bound(model: ChainModel, eps: float = DEFAULT_EPS, grid: Grid = None) -> BoundCertificate:
    """
    Certificate for single arrivals ``lambda(t)`` and a full-batch service ``b_S(t)``.

    The rate is ``(1 - eps) lambda(t)`` and ``C = eps^(1-S)``. For
    ``eps > 1/2`` the service intensity must satisfy
    ``eps lambda(t) >= b_S(t) (2 eps - 1) / (1 - eps)``, which keeps the
    last column sum below the rate for every sign pattern.

    Raises
    ------
    HypothesisError
        If the model does not have this structure.

    Examples
    --------
    >>> from ctmc.bounds.model.processing import pure_batch_service
    >>> cert = batch_service_bound(pure_batch_service(4, 1.0, 0.5), eps=0.5)
    >>> cert.rate.constant, cert.constant
    (0.5, 8.0)
    """
    eps = _check_eps(eps)
    if model.chain_class is not ChainClass.BATCH_SERVICE:
        raise HypothesisError("Batch-service bound needs a batch-service chain.")
    S = model.S
    extra = [k for k, r in model.service_batch.items() if k != S and r != RateFunction(0.0)]
    if extra:
        raise HypothesisError(f"Only the batch of size S may be served, found sizes {extra}.")
    lam = _single_arrival_rate(model)
    b = model.rate("service_batch", S)
    points = DEFAULT_PERIOD_POINTS if grid is None else len(grid)
    if eps > 0.5:
        times = period_grid(points)
        slack = eps * sample_rate(lam, times) - sample_rate(b, times) * (2.0 * eps - 1.0) / (1.0 - eps)
        if np.min(slack) < -1e-12:
            raise HypothesisError(f"Service intensity too large for eps={eps}; choose eps <= 0.5.")
    rate = (1.0 - eps) * lam
    cert = assemble_certificate(rate, eps, S, model=model)
    metadata = {**cert.metadata, "construction": "batch-service", "constant_rate": (1.0 - eps) * lam.minimum(points)}
    return BoundCertificate(
        method=cert.method,
        rate=rate,
        constant=cert.constant,
        norm=cert.norm,
        weights=None,
        conversion=cert.conversion,
        model_hash=cert.model_hash,
        metadata=metadata,
    )


def diffineq_bound(
    model: ChainModel, eps_grid: Sequence[float] = (DEFAULT_EPS,), grid: Grid = None, progress: bool = False
) -> BoundCertificate:
    """
    Certificate from the exhaustive pattern search for small chains.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> round(diffineq_bound(m).rate.constant, 12)
    1.0
    """
    result = exhaustive_alpha(build_Bstar(model), eps_grid, grid, progress)
    cert = assemble_certificate(result.alpha_star, max(eps_grid), model.S, result=result, model=model)
    return cert


def optimize_eps(rate_mean: float, S: int, horizon: float) -> float:
    """
    Template parameter maximising ``(1 - eps) rate_mean + (S - 1) log(eps) / horizon``.

    This trades the rate against ``log C = (1 - S) log eps`` spread over
    the horizon; the optimum is ``(S - 1) / (rate_mean horizon)`` when it
    lies in ``(0, 1)``.

    Examples
    --------
    >>> round(optimize_eps(20.0, 5, 1.0), 4)
    0.2
    """
    if rate_mean <= 0.0 or horizon <= 0.0:
        raise InvalidParameterError("Rate mean and horizon must be positive.")

    def objective(eps: float) -> float:
        return -((1.0 - eps) * rate_mean + (S - 1) * np.log(eps) / horizon)

    result = minimize_scalar(objective, bounds=(1e-9, 1.0 - 1e-9), method="bounded", options={"xatol": 1e-10})
    return float(result.x)
