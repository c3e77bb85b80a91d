"""Module for quadratic Lyapunov-function bounds in the weighted l2 norm.

Three constructions are available: completing squares for symmetrised
birth-death chains, the closed form for pure batch arrivals, and weighted
matrices whose off-diagonal part is antisymmetric at every instant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from scipy.linalg import eigvalsh

from ctmc.bounds._utils.exceptions import HypothesisError
from ctmc.bounds._utils.utils import DEFAULT_PERIOD_POINTS, period_grid
from ctmc.bounds.certificates import (
    BoundCertificate,
    Method,
    Norm,
    Rate,
    conversion_constants,
    pointwise_envelope,
    rate_to_record,
    sample_rate,
)
from ctmc.bounds.matrices import DenseMatrixFn, Grid, WeightVector, build_Bstar, weight_conjugate
from ctmc.bounds.model.io import model_hash
from ctmc.bounds.model.structures import ChainClass, ChainModel, RateFunction

logger = logging.getLogger(__name__)

BISECTION_WIDTH = 1e-10
SYMMETRY_TOLERANCE = 1e-12
BAND_TOLERANCE = 1e-12
ANTISYMMETRY_TOLERANCE = 1e-9
RATIO_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SquaresDecomposition:
    """
    Witness of ``-B** = beta* I + sum_k (a_k w_k - c_k w_{k+1})^2 + r w_S^2``.

    Read as a quadratic form in ``w``; ``-1/2 dV/dt`` for ``V = ||w||^2``.

    Parameters
    ----------
    beta_star : float
        Certified rate (1/time).
    phis : tuple of float
        Elimination remainders ``phi_k > 0``, one per square.
    alphas : tuple of float
        Leading coefficients ``a_k = sqrt(phi_k)``.
    cross : tuple of float
        Coupling coefficients ``c_k = e_k / sqrt(phi_k)``.
    terminal : float
        Remaining coefficient ``r >= 0`` of ``w_S^2``.
    direction_log : tuple of (float, float, str)
        Segment ``(lower, upper)`` and sweep direction after each bisection step.

    Examples
    --------
    >>> dec = beta_star_squares(np.array([[-2.0, 1.0], [1.0, -2.0]]))
    >>> round(dec.beta_star, 8)
    1.0
    >>> bool(dec.residual(np.array([[-2.0, 1.0], [1.0, -2.0]])) < 1e-9)
    True
    """

    beta_star: float
    phis: tuple[float, ...]
    alphas: tuple[float, ...]
    cross: tuple[float, ...]
    terminal: float
    direction_log: tuple[tuple[float, float, str], ...] = ()

    @property
    def size(self) -> int:
        return len(self.alphas) + 1

    def reconstruct(self) -> np.ndarray:
        """Matrix of the quadratic form rebuilt from the witnesses."""
        n = self.size
        Q = self.beta_star * np.eye(n)
        for k, (a, c) in enumerate(zip(self.alphas, self.cross)):
            v = np.zeros(n)
            v[k], v[k + 1] = a, -c
            Q += np.outer(v, v)
        Q[-1, -1] += self.terminal
        return Q

    def residual(self, Bss: np.ndarray) -> float:
        """Largest entry of ``reconstruct() + B**``."""
        return float(np.max(np.abs(self.reconstruct() + np.asarray(Bss, dtype=float))))

    def to_record(self) -> dict[str, Any]:
        return {
            "beta_star": self.beta_star,
            "phis": list(self.phis),
            "alphas": list(self.alphas),
            "cross": list(self.cross),
            "terminal": self.terminal,
            "steps": len(self.direction_log),
        }


def symmetrize_bd(model: ChainModel) -> WeightVector:
    """
    Weights ``d_1 = 1``, ``d_{k+1} = d_k sqrt(mu_k / lambda_k)``.

    Raises
    ------
    HypothesisError
        If the model is not a homogeneous birth-death chain with positive rates.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 2}, death={1: 8, 2: 1})
    >>> symmetrize_bd(m).d
    array([1., 2.])
    """
    if model.chain_class is not ChainClass.BIRTH_DEATH or not model.is_homogeneous:
        raise HypothesisError("Symmetrising weights need a homogeneous birth-death chain.")
    lam = np.array([model.rate("birth", k).constant for k in range(model.S)])
    mu = np.array([model.rate("death", k).constant for k in range(1, model.S + 1)])
    if np.any(lam[1:] <= 0.0) or np.any(mu[:-1] <= 0.0):
        raise HypothesisError("Symmetrising weights need positive birth and death intensities.")
    steps = 0.5 * (np.log(mu[:-1]) - np.log(lam[1:]))
    return WeightVector.from_log(np.concatenate([[0.0], np.cumsum(steps)]))


def _pivots(q: np.ndarray, e: np.ndarray, beta: float) -> Optional[np.ndarray]:
    pivots = np.empty(q.size)
    pivots[0] = q[0] - beta
    if pivots[0] <= 0.0:
        return None
    for k in range(1, q.size):
        pivots[k] = q[k] - beta - e[k - 1] ** 2 / pivots[k - 1]
        if pivots[k] <= 0.0:
            return None
    return pivots


def beta_star_squares(
    Bss: np.ndarray, model: Optional[ChainModel] = None, width: float = BISECTION_WIDTH
) -> SquaresDecomposition:
    """
    Completing-squares sweep with nested-segment bisection for ``beta*``.

    For a trial ``beta`` the cross terms of ``-B** - beta I`` are eliminated
    one by one; the trial is feasible when every remainder stays positive.
    A feasible trial raises the lower end of the segment and the next sweep
    runs from the other end of the chain; an infeasible one lowers the upper
    end. The segment starts at ``[0, min_k(-b**_kk)]``.

    Parameters
    ----------
    Bss : np.ndarray
        Symmetric tridiagonal weighted matrix.
    model : ChainModel, optional
        Source model, checked to be a birth-death chain.
    width : float, optional
        Stopping width of the segment, default 1e-10.

    Returns
    -------
    SquaresDecomposition
        Witnesses at the lower end of the final segment.

    Raises
    ------
    HypothesisError
        If ``Bss`` is not symmetric tridiagonal up to ``1e-12 max|b**_ij|``,
        or ``-B**`` is not positive definite.

    Examples
    --------
    >>> round(beta_star_squares(np.array([[-5.0]])).beta_star, 8)
    5.0
    """
    if model is not None and model.chain_class is not ChainClass.BIRTH_DEATH:
        raise HypothesisError("Completing squares applies to birth-death chains.")
    B = np.asarray(Bss, dtype=float)
    n = B.shape[0]
    scale = max(1.0, float(np.max(np.abs(B))))
    if np.max(np.abs(B - B.T)) > SYMMETRY_TOLERANCE * scale:
        raise HypothesisError("B** must be symmetric.")
    outside = np.abs(np.triu(B, 2)) + np.abs(np.tril(B, -2))
    if np.any(outside > BAND_TOLERANCE * scale):
        raise HypothesisError("B** must be tridiagonal.")
    B = np.triu(np.tril(B, 1), -1)
    B = 0.5 * (B + B.T)
    q = -np.diag(B)
    e = np.abs(np.diag(B, 1))
    lower, upper = 0.0, float(q.min())
    if _pivots(q, e, lower) is None:
        raise HypothesisError("-B** is not positive definite; no positive rate by completing squares.")
    forward = True
    log: list[tuple[float, float, str]] = []
    while upper - lower > width:
        beta = 0.5 * (lower + upper)
        direction = "forward" if forward else "reverse"
        feasible = (_pivots(q, e, beta) if forward else _pivots(q[::-1], e[::-1], beta)) is not None
        if feasible:
            lower = beta
            forward = not forward
        else:
            upper = beta
        log.append((lower, upper, direction))
        logger.debug("squares segment [%.12g, %.12g] after %s sweep", lower, upper, direction)
    pivots = _pivots(q, e, lower)
    assert pivots is not None
    alphas = np.sqrt(pivots[:-1])
    return SquaresDecomposition(
        beta_star=lower,
        phis=tuple(float(p) for p in pivots[:-1]),
        alphas=tuple(float(a) for a in alphas),
        cross=tuple(float(c) for c in e / alphas) if n > 1 else (),
        terminal=float(pivots[-1]),
        direction_log=tuple(log),
    )


def beta_star_eig(Bss: np.ndarray) -> float:
    """
    Smallest eigenvalue of ``-B**`` from a symmetric eigensolver.

    Examples
    --------
    >>> round(beta_star_eig(np.array([[-2.0, 1.0], [1.0, -2.0]])), 12)
    1.0
    >>> beta_star_eig(np.diag([-3.0, -7.0]))
    3.0
    """
    return float(eigvalsh(-np.asarray(Bss, dtype=float))[0])


def symmetrized_matrix(model: ChainModel) -> tuple[WeightVector, np.ndarray]:
    """
    Symmetrising weights and the symmetric tridiagonal ``B**`` of a birth-death chain.

    Entries of ``B*`` outside the tridiagonal band are dropped before weighting.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 2}, death={1: 8, 2: 1})
    >>> d, Bss = symmetrized_matrix(m)
    >>> bool(np.allclose(Bss, Bss.T)), bool(np.all(np.triu(Bss, 2) == 0.0))
    (True, True)
    """
    d = symmetrize_bd(model)
    band = np.triu(np.tril(build_Bstar(model).constant, 1), -1)
    Bss = weight_conjugate(DenseMatrixFn(band), d).constant
    return d, 0.5 * (Bss + Bss.T)


def birth_death_bound(model: ChainModel) -> BoundCertificate:
    """
    Sharp weighted l2 certificate for a homogeneous birth-death chain.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> cert = birth_death_bound(m)
    >>> round(cert.rate.constant, 8), cert.norm.value
    (1.0, 'l2')
    """
    d, Bss = symmetrized_matrix(model)
    decomposition = beta_star_squares(Bss, model)
    return BoundCertificate(
        method=Method.LYAPUNOV,
        rate=RateFunction(decomposition.beta_star),
        constant=1.0,
        norm=Norm.L2,
        weights=d,
        sharp=True,
        conversion=conversion_constants(d, model.S, Norm.L2),
        model_hash=model_hash(model),
        metadata={"construction": "squares", "decomposition": decomposition.to_record()},
    )


def antisymmetrizing_weights(Bstar: DenseMatrixFn) -> WeightVector:
    """
    Weights making the off-diagonal part of ``D B* D^-1`` antisymmetric.

    ``(d_{k+1} / d_k)^2 = b*_{k,k+1}(t) / (-b*_{k+1,k}(t))`` must be a
    positive constant wherever either entry is nonzero. The two entries are
    compared through their trigonometric coefficients, so the ratio is
    constant exactly when the coefficient vectors are proportional.

    Raises
    ------
    HypothesisError
        If the ratio is not positive or varies in time.

    Examples
    --------
    >>> antisymmetrizing_weights(DenseMatrixFn(np.array([[-3.0, 8.0], [-2.0, -3.0]]))).d
    array([1., 2.])
    """
    coefficients = np.stack(list(Bstar.coefficients()))
    logs = [0.0]
    for k in range(Bstar.dim - 1):
        upper = coefficients[:, k, k + 1]
        lower = -coefficients[:, k + 1, k]
        scale = max(1.0, float(np.max(np.abs(upper))), float(np.max(np.abs(lower))))
        upper_zero = np.all(np.abs(upper) <= RATIO_TOLERANCE * scale)
        lower_zero = np.all(np.abs(lower) <= RATIO_TOLERANCE * scale)
        if upper_zero and lower_zero:
            logs.append(logs[-1])
            continue
        if upper_zero or lower_zero:
            raise HypothesisError(f"No antisymmetrising weight for the pair ({k + 1}, {k + 2}).")
        ratio = float(upper @ lower) / float(lower @ lower)
        if not ratio > 0.0:
            raise HypothesisError(f"No antisymmetrising weight for the pair ({k + 1}, {k + 2}).")
        if np.max(np.abs(upper - ratio * lower)) > RATIO_TOLERANCE * scale:
            raise HypothesisError(f"Weight ratio for the pair ({k + 1}, {k + 2}) varies in time.")
        logs.append(logs[-1] + 0.5 * np.log(ratio))
    return WeightVector.from_log(logs)


def _antisymmetry_defect(Bss: DenseMatrixFn) -> tuple[float, int, int]:
    worst = (0.0, 0, 0)
    off = ~np.eye(Bss.dim, dtype=bool)
    for coefficient in Bss.coefficients():
        defect = np.where(off, np.abs(coefficient + coefficient.T), 0.0)
        i, j = np.unravel_index(int(np.argmax(defect)), defect.shape)
        if defect[i, j] > worst[0]:
            worst = (float(defect[i, j]), int(i), int(j))
    return worst


def antisym_offdiag_bound(
    model: ChainModel,
    d: Optional[WeightVector] = None,
    grid: Grid = None,
    envelope: Optional[Rate] = None,
) -> BoundCertificate:
    """
    Weighted l2 certificate when ``B**`` has an antisymmetric off-diagonal part.

    Then ``dV/dt = 2 sum_k b**_kk(t) w_k^2`` and the rate is
    ``min_k(-b**_kk(t))``. Antisymmetry is checked on every coefficient
    matrix, which covers every instant.

    Parameters
    ----------
    model : ChainModel
        Valid chain model.
    d : WeightVector, optional
        Weights; found by ``antisymmetrizing_weights`` when omitted.
    grid : array_like, optional
        Sampling grid for the rate envelope.
    envelope : Rate, optional
        Simpler rate to certify instead; it must stay below the exact rate.

    Raises
    ------
    HypothesisError
        If antisymmetry fails or ``envelope`` exceeds the exact rate.

    Examples
    --------
    >>> from ctmc.bounds.model.processing import uniform_batch_arrival
    >>> cert = antisym_offdiag_bound(uniform_batch_arrival(3, 1.0, [1.0, 2.0, 3.0]))
    >>> round(cert.rate.constant, 12)
    3.0
    """
    Bstar = build_Bstar(model)
    weights = antisymmetrizing_weights(Bstar) if d is None else d
    Bss = weight_conjugate(Bstar, weights)
    defect, i, j = _antisymmetry_defect(Bss)
    if defect > ANTISYMMETRY_TOLERANCE:
        raise HypothesisError(
            f"Off-diagonal part is not antisymmetric at entry ({i + 1}, {j + 1}): defect {defect:.3g}"
        )
    points = DEFAULT_PERIOD_POINTS if grid is None else len(grid)
    exact = pointwise_envelope([-1.0 * r for r in Bss.diagonal()], lower=True, points=points)
    metadata: dict[str, Any] = {"construction": "antisymmetric", "exact_rate": rate_to_record(exact)}
    rate: Rate = exact
    if envelope is not None:
        check = period_grid(points)
        if np.any(sample_rate(envelope, check) > sample_rate(exact, check) + 1e-12):
            raise HypothesisError("Reference rate exceeds the certified rate somewhere on the grid.")
        rate = envelope
        metadata["reference_rate"] = rate_to_record(envelope)
    return BoundCertificate(
        method=Method.LYAPUNOV,
        rate=rate,
        constant=1.0,
        norm=Norm.L2,
        weights=weights,
        sharp=False,
        conversion=conversion_constants(weights, model.S, Norm.L2),
        model_hash=model_hash(model),
        metadata=metadata,
    )


def batch_arrival_rate(lam: float, mu: list[float]) -> float:
    """
    Rate ``min((S-1) lam + mu_1, ..., lam + mu_{S-1}, mu_S)`` of a pure batch-arrival chain.

    Examples
    --------
    >>> batch_arrival_rate(1.0, [1.0, 2.0, 3.0])
    3.0
    >>> batch_arrival_rate(1.0, [1.0, 2.0, 100.0])
    3.0
    """
    S = len(mu)
    return float(min((S - k) * lam + mu[k - 1] for k in range(1, S + 1)))


def batch_arrival_bound(model: ChainModel) -> BoundCertificate:
    """
    Weighted l2 certificate for homogeneous pure batch arrivals.

    The chain has ``q_{k,k+1} = 0``, ``q_{k,k+i} = lam`` for ``i >= 2`` and
    single services ``mu_k > 0``; weights ``d_{k+1} = d_k sqrt(mu_k / lam)``.

    Raises
    ------
    HypothesisError
        If the model does not have this structure.

    Examples
    --------
    >>> from ctmc.bounds.model.processing import uniform_batch_arrival
    >>> cert = batch_arrival_bound(uniform_batch_arrival(3, 1.0, [1.0, 2.0, 3.0]))
    >>> round(cert.rate.constant, 12), cert.metadata["closed_form"]
    (3.0, 3.0)
    """
    if model.chain_class is not ChainClass.BATCH_ARRIVAL or not model.is_homogeneous:
        raise HypothesisError("Closed form needs a homogeneous batch-arrival chain.")
    S = model.S
    if model.rate("arrival_batch", 1).constant != 0.0:
        raise HypothesisError("Closed form needs q_{k,k+1} = 0.")
    sizes = [model.rate("arrival_batch", k).constant for k in range(2, S + 1)]
    if sizes and (min(sizes) != max(sizes) or sizes[0] <= 0.0):
        raise HypothesisError("Closed form needs equal positive batch intensities for every size >= 2.")
    lam = sizes[0] if sizes else 0.0
    mu = [model.rate("death", k).constant for k in range(1, S + 1)]
    if min(mu) <= 0.0:
        raise HypothesisError("Closed form needs positive service intensities.")
    steps = 0.5 * (np.log(mu[:-1]) - np.log(lam)) if S > 1 else np.array([])
    d = WeightVector.from_log(np.concatenate([[0.0], np.cumsum(steps)]))
    cert = antisym_offdiag_bound(model, d)
    closed_form = batch_arrival_rate(lam, mu)
    return BoundCertificate(
        method=Method.LYAPUNOV,
        rate=RateFunction(closed_form),
        constant=1.0,
        norm=Norm.L2,
        weights=d,
        sharp=False,
        conversion=cert.conversion,
        model_hash=cert.model_hash,
        metadata={**cert.metadata, "construction": "batch-arrival", "closed_form": closed_form},
    )
