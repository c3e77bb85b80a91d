"""Module for logarithmic-norm convergence bounds in the weighted l1 norm."""

from __future__ import annotations

import dataclasses
import logging
import warnings
from typing import Optional

import numpy as np
from scipy.linalg import eig

from ctmc.bounds._utils.exceptions import HypothesisError, InvalidParameterError, NumericalError
from ctmc.bounds._utils.utils import DEFAULT_PERIOD_POINTS, period_grid
from ctmc.bounds.certificates import (
    BoundCertificate,
    Method,
    Norm,
    RatePair,
    conversion_constants,
    pointwise_envelope,
    sample_rate,
)
from ctmc.bounds.matrices import (
    DenseMatrixFn,
    Grid,
    WeightVector,
    build_Bstar,
    offdiagonal_minimum,
    weight_conjugate,
)
from ctmc.bounds.model.io import model_hash
from ctmc.bounds.model.structures import ChainClass, ChainModel, RateFunction

logger = logging.getLogger(__name__)

POWER_TOLERANCE = 1e-13
POWER_MAX_ITERATIONS = 20_000
COLUMN_SUM_TOLERANCE = 1e-9
SHARPNESS_TOLERANCE = 1e-9


def log_norm(M: np.ndarray) -> float:
    """
    Logarithmic norm of a matrix in l1.

    ``gamma(M) = max_j (m_jj + sum_{i != j} |m_ij|)``.

    Examples
    --------
    >>> log_norm(np.array([[-2.0, 1.0], [1.0, -2.0]]))
    -1.0
    >>> log_norm(np.array([[4.5]]))
    4.5
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidParameterError(f"Logarithmic norm needs a square matrix, got shape {M.shape}.")
    off = np.abs(M).sum(axis=0) - np.abs(np.diag(M))
    return float(np.max(np.diag(M) + off))


def alpha_functions(Bss: DenseMatrixFn, grid: Grid = None) -> RatePair:
    """
    Column functionals ``alpha_i(t) = -sum_j b**_ji(t)`` and their envelopes.

    Parameters
    ----------
    Bss : DenseMatrixFn
        Weighted matrix ``D B* D^-1``.
    grid : array_like, optional
        Number of samples is taken from its length; default 2001 points.

    Returns
    -------
    RatePair
        ``alpha = inf_i alpha_i`` and ``beta = sup_i alpha_i``.

    Examples
    --------
    >>> pair = alpha_functions(DenseMatrixFn(np.array([[-2.0, 1.0], [1.0, -2.0]])))
    >>> pair.alpha.constant, pair.beta.constant
    (1.0, 1.0)
    """
    points = DEFAULT_PERIOD_POINTS if grid is None else len(grid)
    per_state = tuple(-1.0 * column for column in Bss.column_sums())
    return RatePair(
        alpha=pointwise_envelope(per_state, lower=True, points=points),
        beta=pointwise_envelope(per_state, lower=False, points=points),
        per_state=per_state,
    )


def _is_sharp(pair: RatePair, points: int) -> bool:
    grid = period_grid(points)
    return bool(np.max(sample_rate(pair.beta, grid) - sample_rate(pair.alpha, grid)) <= SHARPNESS_TOLERANCE)


def ergodicity_bound(
    model: ChainModel,
    d: Optional[WeightVector] = None,
    horizon: tuple[float, float] = (0.0, np.inf),
    grid: Grid = None,
) -> BoundCertificate:
    """
    Weighted l1 bound ``||w(t)|| <= exp(-int_s^t alpha) ||w(s)||``.

    Parameters
    ----------
    model : ChainModel
        Valid chain model.
    d : WeightVector, optional
        Positive weights with ``d_1 = 1``; unit weights by default.
    horizon : tuple of float, optional
        ``(s, T)``; the certificate is valid from ``s``.
    grid : array_like, optional
        Sampling grid for the hypothesis check and the envelopes.

    Returns
    -------
    BoundCertificate
        Certificate with ``C = 1`` and the lower-bound rate ``beta``.

    Raises
    ------
    HypothesisError
        If ``B*(t)`` is not essentially non-negative on the grid.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> cert = ergodicity_bound(m)
    >>> cert.rate.constant, cert.constant, cert.norm.value, cert.sharp
    (1.0, 1.0, 'l1', True)
    """
    s, T = horizon
    if not T > s:
        raise InvalidParameterError(f"Horizon must be increasing, got {horizon}.")
    weights = WeightVector.ones(model.S) if d is None else d
    if weights.signed:
        raise InvalidParameterError("Logarithmic-norm bounds need positive weights.")
    if abs(weights.log_magnitude[0]) > 1e-12:
        raise InvalidParameterError("Weights must be normalised so that d_1 = 1.")
    Bstar = build_Bstar(model)
    value, i, j, t = offdiagonal_minimum(Bstar, grid)
    if value < -1e-12:
        raise HypothesisError(
            f"B*(t) is not essentially non-negative: entry ({i + 1}, {j + 1}) is {value:.3g} at t={t:.4g}"
        )
    points = DEFAULT_PERIOD_POINTS if grid is None else len(grid)
    pair = alpha_functions(weight_conjugate(Bstar, weights), grid)
    sharp = _is_sharp(pair, points)
    ergodic = pair.alpha.mean() > 0.0
    if not ergodic:
        warnings.warn(
            f"Mean rate {pair.alpha.mean():.4g} is not positive: no ergodicity conclusion by this method.",
            stacklevel=2,
        )
    return BoundCertificate(
        method=Method.LOGNORM,
        rate=pair.alpha,
        constant=1.0,
        norm=Norm.L1,
        weights=weights,
        sharp=sharp,
        valid_from=float(s),
        lower_rate=pair.beta,
        conversion=conversion_constants(weights, model.S, Norm.L1),
        model_hash=model_hash(model),
        metadata={"ergodic": ergodic, "per_state_means": [a.mean() for a in pair.per_state]},
    )


def lower_bound(certificate: BoundCertificate, t: float, s: Optional[float] = None) -> float:
    """
    Lower envelope ``exp(-int_s^t beta)`` for componentwise nonnegative ``w(s)``.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> round(lower_bound(ergodicity_bound(m), 1.0), 12) == round(float(np.exp(-1.0)), 12)
    True
    """
    return float(certificate.lower_factor(t, s))


def _power_iteration(shifted: np.ndarray) -> Optional[np.ndarray]:
    n = shifted.shape[0]
    x = np.full(n, 1.0 / n)
    for iteration in range(1, POWER_MAX_ITERATIONS + 1):
        y = shifted @ x
        norm = y.sum()
        if not norm > 0.0:
            raise NumericalError("Power iteration collapsed to zero; the matrix is not irreducible.")
        y /= norm
        rayleigh = float((shifted @ y).sum() / y.sum())
        if np.max(np.abs(shifted @ y - rayleigh * y)) <= POWER_TOLERANCE * rayleigh * np.max(y):
            logger.debug("power iteration converged after %d steps", iteration)
            return y
        x = y
    logger.debug("power iteration stopped after %d steps", POWER_MAX_ITERATIONS)
    return None


def _perron_eig(shifted: np.ndarray) -> np.ndarray:
    values, vectors = eig(shifted)
    x = np.real(vectors[:, int(np.argmax(values.real))])
    return x if x.sum() > 0.0 else -x


def _column_spread(B: np.ndarray, x: np.ndarray) -> float:
    if np.any(x <= 0.0):
        return np.inf
    sums = (x @ B) / x
    return float(np.ptp(sums))


def decay_parameter_weights(Bstar: np.ndarray) -> tuple[WeightVector, float]:
    """
    Weights that equalise every column sum of ``D B* D^-1``.

    ``B*^T + 2m I`` with ``m = max |b*_ii|`` is non-negative with a positive
    diagonal, and its Perron vector ``x`` is the one of ``B*^T + m I``; then
    ``d = x / x_1`` and the common column sum is ``-alpha*``. Power iteration
    with a relative Rayleigh-quotient stop gives a first ``x``; an
    eigendecomposition of the balanced matrix gives a second, and the one
    with the smaller column-sum spread is kept.

    Parameters
    ----------
    Bstar : np.ndarray
        Constant, essentially non-negative and irreducible matrix.

    Returns
    -------
    tuple of (WeightVector, float)
        Weights with ``d_1 = 1`` and the decay parameter ``alpha*``.

    Raises
    ------
    NumericalError
        If no positive Perron vector equalises the column sums within
        ``1e-9 max(1, m)``.

    Examples
    --------
    >>> d, alpha = decay_parameter_weights(np.array([[-5.0]]))
    >>> d.d, alpha
    (array([1.]), 5.0)
    >>> d, alpha = decay_parameter_weights(np.array([[-2.0, 1.0], [1.0, -2.0]]))
    >>> d.d, round(alpha, 10)
    (array([1., 1.]), 1.0)
    """
    B = np.asarray(Bstar, dtype=float)
    n = B.shape[0]
    m = float(np.max(np.abs(np.diag(B))))
    shifted = B.T + 2.0 * m * np.eye(n)
    candidates = [_perron_eig(shifted)]
    iterated = _power_iteration(shifted)
    if iterated is not None:
        candidates.append(iterated)
    x = min(candidates, key=lambda v: _column_spread(B, v))
    if np.any(x <= 0.0):
        raise NumericalError("Perron vector has a non-positive component; the matrix is reducible.")
    d = x / x[0]
    sums = (d @ B) / d
    alpha_star = -float(np.mean(sums))
    if np.max(np.abs(sums + alpha_star)) > COLUMN_SUM_TOLERANCE * max(1.0, m):
        raise NumericalError("Weighted column sums are not equal for the Perron vector.")
    return WeightVector.from_log(np.log(d)), alpha_star


def decay_parameter_bound(model: ChainModel) -> BoundCertificate:
    """
    Sharp certificate for a finite homogeneous birth-death chain.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> cert = decay_parameter_bound(m)
    >>> round(cert.rate.constant, 10), cert.sharp
    (1.0, True)
    """
    if model.chain_class is not ChainClass.BIRTH_DEATH or not model.is_homogeneous:
        raise HypothesisError("Decay-parameter weights need a homogeneous birth-death chain.")
    positive = all(model.rate("birth", i).constant > 0 for i in range(model.S)) and all(
        model.rate("death", i).constant > 0 for i in range(1, model.S + 1)
    )
    if not positive:
        raise HypothesisError("All birth and death intensities must be positive.")
    d, alpha_star = decay_parameter_weights(build_Bstar(model).constant)
    cert = ergodicity_bound(model, d)
    return dataclasses.replace(
        cert,
        rate=RateFunction(alpha_star),
        lower_rate=RateFunction(alpha_star),
        sharp=True,
        metadata={**cert.metadata, "decay_parameter": alpha_star},
    )
