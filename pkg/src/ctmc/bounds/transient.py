"""Module integrating the forward Kolmogorov system and checking certificates against it."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Optional, Union

import numpy as np
import pandas as pd
from scipy.integrate import RK45
from scipy.linalg import expm, null_space, solve

from ctmc.bounds._utils.exceptions import HypothesisError, InvalidParameterError, NumericalError
from ctmc.bounds.certificates import BoundCertificate, Method
from ctmc.bounds.matrices import DenseMatrixFn, build_A, build_Bstar, offdiagonal_minimum
from ctmc.bounds.model.io import model_hash
from ctmc.bounds.model.structures import ChainModel, RateFunction

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8
DRIFT_TOLERANCE = 1e-12
MASS_TOLERANCE = 1e-10
VIOLATION_TOLERANCE = 1e-6
TINY_ENVELOPE = 1e-300
TSTAR_TOLERANCE = 1e-12
SCAN_POINTS_PER_PERIOD = 200
MAX_SCAN_PERIODS = 10_000
MIDPOINT_STEP = 1e-3

Initial = Union[int, str, np.ndarray]


def initial_distribution(S: int, initial: Initial) -> np.ndarray:
    """
    Probability vector from a state index, ``"uniform"`` or an explicit vector.

    Examples
    --------
    >>> initial_distribution(2, 1)
    array([0., 1., 0.])
    >>> initial_distribution(3, "uniform")
    array([0.25, 0.25, 0.25, 0.25])
    """
    if isinstance(initial, str):
        if initial != "uniform":
            raise InvalidParameterError(f"Initial state must be an index or 'uniform', got {initial!r}.")
        return np.full(S + 1, 1.0 / (S + 1))
    if isinstance(initial, (int, np.integer)):
        if not 0 <= initial <= S:
            raise InvalidParameterError(f"Initial state {initial} outside 0..{S}.")
        p = np.zeros(S + 1)
        p[int(initial)] = 1.0
        return p
    p = np.asarray(initial, dtype=float)
    if p.shape != (S + 1,):
        raise InvalidParameterError(f"Initial distribution must have length {S + 1}, got shape {p.shape}.")
    if np.any(p < -DRIFT_TOLERANCE) or abs(p.sum() - 1.0) > MASS_TOLERANCE:
        raise InvalidParameterError("Initial vector is not a probability distribution.")
    return p.copy()


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Time-stamped probability vectors of the chain.

    Parameters
    ----------
    times : np.ndarray
        Strictly increasing output times.
    states : np.ndarray
        Array of shape ``(len(times), S + 1)``.
    initial_state : int, str or np.ndarray
        Initial state as requested.
    solver_tolerance : float
        Local error tolerance of the integration.
    method : str
        ``"RK45"``, ``"midpoint"`` or ``"expm"``.

    Examples
    --------
    >>> traj = Trajectory(np.array([0.0, 1.0]), np.array([[1.0, 0.0], [0.5, 0.5]]), 0, 1e-8)
    >>> traj.S, traj.final.tolist()
    (1, [0.5, 0.5])
    """

    times: np.ndarray
    states: np.ndarray
    initial_state: Initial
    solver_tolerance: float
    method: str = "RK45"

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if states.shape[0] != times.size:
            raise InvalidParameterError("One probability vector per output time is required.")
        if times.size > 1 and np.any(np.diff(times) <= 0.0):
            raise InvalidParameterError("Trajectory times must be strictly increasing.")
        if np.any(states < -DRIFT_TOLERANCE) or np.any(np.abs(states.sum(axis=1) - 1.0) > MASS_TOLERANCE):
            raise NumericalError("Trajectory left the probability simplex.")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def S(self) -> int:
        return self.states.shape[1] - 1

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def window(self, t0: float, t1: float) -> Trajectory:
        """
        Restriction to output times in ``[t0, t1]``.

        Examples
        --------
        >>> traj = Trajectory(np.array([0.0, 1.0, 2.0]), np.full((3, 2), 0.5), 0, 1e-8)
        >>> traj.window(0.5, 2.0).times.tolist()
        [1.0, 2.0]
        """
        mask = (self.times >= t0 - 1e-12) & (self.times <= t1 + 1e-12)
        if not np.any(mask):
            raise InvalidParameterError(f"No output time in [{t0}, {t1}].")
        return Trajectory(self.times[mask], self.states[mask], self.initial_state, self.solver_tolerance, self.method)

    def to_frame(self) -> pd.DataFrame:
        """
        Table with columns ``t``, ``p_0`` ... ``p_S`` and ``E[X]``.

        Examples
        --------
        >>> traj = Trajectory(np.array([0.0]), np.array([[0.25, 0.75]]), 1, 1e-8)
        >>> traj.to_frame().columns.tolist()
        ['t', 'p_0', 'p_1', 'E[X]']
        """
        frame = pd.DataFrame(self.states, columns=[f"p_{k}" for k in range(self.S + 1)])
        frame.insert(0, "t", self.times)
        frame["E[X]"] = expected_value(self).to_numpy()
        return frame

    def reduced_frame(self, states: Optional[list[int]] = None) -> pd.DataFrame:
        """
        Table with ``t``, ``E[X]`` and the probabilities of selected states.

        By default the states ``0``, ``S // 2`` and ``S`` are kept.
        """
        keep = sorted({0, self.S // 2, self.S}) if states is None else list(states)
        bad = [k for k in keep if not 0 <= k <= self.S]
        if bad:
            raise InvalidParameterError(f"States {bad} outside 0..{self.S}.")
        frame = pd.DataFrame({"t": self.times, "E[X]": expected_value(self).to_numpy()})
        for k in keep:
            frame[f"p_{k}"] = self.states[:, k]
        return frame


def expected_value(traj: Trajectory) -> pd.Series:
    """
    Mean state ``sum_k k p_k(t)`` at every output time.

    Examples
    --------
    >>> traj = Trajectory(np.array([0.0]), np.full((1, 5), 0.2), "uniform", 1e-8)
    >>> float(expected_value(traj).iloc[0])
    2.0
    """
    values = traj.states @ np.arange(traj.S + 1, dtype=float)
    return pd.Series(values, index=pd.Index(traj.times, name="t"), name="E[X]")


def _project(p: np.ndarray) -> tuple[np.ndarray, float]:
    drift = max(float(-p.min()), abs(float(p.sum()) - 1.0))
    if drift <= DRIFT_TOLERANCE:
        return p, drift
    q = np.clip(p, 0.0, None)
    return q / q.sum(), drift


def _output_grid(t0: float, t1: float, points: Optional[int]) -> Optional[np.ndarray]:
    if points is None:
        return None
    if points < 2:
        raise InvalidParameterError("At least two output points are required.")
    return np.linspace(t0, t1, points)


def _integrate_rk45(
    A: DenseMatrixFn, p0: np.ndarray, t0: float, t1: float, tol: float
) -> tuple[list[float], list[np.ndarray]]:
    def rhs(t: float, p: np.ndarray) -> np.ndarray:
        return A.at(t) @ p

    solver = RK45(rhs, t0, p0, t1, rtol=tol, atol=tol)
    nodes, ys = [t0], [p0.copy()]
    corrections, worst = 0, 0.0
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise NumericalError(f"Integration failed at t={solver.t:.6g}: {message}")
        y, drift = _project(solver.y)
        if y is not solver.y:
            corrections += 1
            worst = max(worst, drift)
            logger.debug("renormalised drift %.3e at t=%.6g", drift, solver.t)
            solver.y = y
            solver.f = rhs(solver.t, y)
        nodes.append(float(solver.t))
        ys.append(np.array(solver.y))
    if corrections:
        logger.warning("renormalised %d steps, largest drift %.3e", corrections, worst)
    return nodes, ys


def _integrate_midpoint(
    A: DenseMatrixFn, p0: np.ndarray, t0: float, t1: float, step: float
) -> tuple[list[float], list[np.ndarray]]:
    n = max(1, math.ceil((t1 - t0) / step))
    times = np.linspace(t0, t1, n + 1)
    eye = np.eye(p0.size)
    nodes, ys = [t0], [p0.copy()]
    p = p0.copy()
    for left, right in zip(times[:-1], times[1:]):
        h = right - left
        M = A.at(left + 0.5 * h)
        p, _ = _project(solve(eye - 0.5 * h * M, (eye + 0.5 * h * M) @ p))
        nodes.append(float(right))
        ys.append(p.copy())
    return nodes, ys


INTEGRATORS = {"RK45": _integrate_rk45, "midpoint": _integrate_midpoint}


def solve_kolmogorov(
    model: ChainModel,
    p0: Initial,
    horizon: tuple[float, float],
    tol: float = DEFAULT_TOLERANCE,
    points: Optional[int] = None,
    method: str = "RK45",
    step: float = MIDPOINT_STEP,
) -> Trajectory:
    """
    Integrate ``p' = A(t) p`` over ``horizon``.

    The default is an adaptive Dormand-Prince 5(4) pair with ``rtol = atol
    = tol``; ``method="midpoint"`` uses fixed implicit-midpoint steps. After
    every step the vector is clipped at zero and renormalised when it
    drifts from the simplex by more than 1e-12.

    Parameters
    ----------
    model : ChainModel
        Valid chain model.
    p0 : int, str or np.ndarray
        Initial state index, ``"uniform"`` or a distribution.
    horizon : tuple of float
        ``(t0, t1)`` with ``t1 > t0``.
    tol : float, optional
        Local error tolerance, default 1e-8.
    points : int, optional
        Uniform output grid size. The integration restarts at every grid
        time, so no value is interpolated. The accepted steps are returned
        if None.
    method : str, optional
        ``"RK45"`` (default) or ``"midpoint"``.
    step : float, optional
        Step of the midpoint rule, default 1e-3.

    Returns
    -------
    Trajectory
        Probability vectors at the output times.

    Raises
    ------
    NumericalError
        If the step size underflows.

    Examples
    --------
    >>> m = ChainModel.birth_death(1, birth={0: 1.0}, death={1: 1.0})
    >>> traj = solve_kolmogorov(m, 0, (0.0, 1.0), tol=1e-10, points=3)
    >>> round(float(traj.final[0]), 8) == round(0.5 + 0.5 * float(np.exp(-2.0)), 8)
    True
    """
    t0, t1 = float(horizon[0]), float(horizon[1])
    if not t1 > t0:
        raise InvalidParameterError(f"Horizon must be increasing, got {horizon}.")
    if not tol > 0.0:
        raise InvalidParameterError(f"Tolerance must be positive, got {tol}.")
    if method not in INTEGRATORS:
        raise InvalidParameterError(f"Unknown integration method {method!r}.")
    if method == "midpoint" and not step > 0.0:
        raise InvalidParameterError(f"Midpoint step must be positive, got {step}.")
    grid = _output_grid(t0, t1, points)
    start = initial_distribution(model.S, p0)
    A = build_A(model)
    resolution = tol if method == "RK45" else step
    if grid is None:
        nodes, ys = INTEGRATORS[method](A, start, t0, t1, resolution)
        steps = len(nodes) - 1
    else:
        nodes, ys, steps = [t0], [start], 0
        for left, right in zip(grid[:-1], grid[1:]):
            span_nodes, span_ys = INTEGRATORS[method](A, ys[-1], float(left), float(right), resolution)
            steps += len(span_nodes) - 1
            nodes.append(float(right))
            ys.append(span_ys[-1])
    logger.info("integrated S=%d over [%g, %g] in %d steps (%s)", model.S, t0, t1, steps, method)
    return Trajectory(
        times=np.asarray(nodes) if grid is None else grid,
        states=np.vstack(ys),
        initial_state=p0,
        solver_tolerance=tol,
        method=method,
    )


def _require_homogeneous(model: ChainModel) -> np.ndarray:
    if not model.is_homogeneous:
        raise InvalidParameterError("A time-independent model is required.")
    return build_A(model).constant


def stationary_distribution(model: ChainModel) -> np.ndarray:
    """
    Solution of ``A p = 0`` with unit mass for a homogeneous chain.

    Examples
    --------
    >>> stationary_distribution(ChainModel.birth_death(1, birth={0: 1.0}, death={1: 3.0}))
    array([0.75, 0.25])
    """
    basis = null_space(_require_homogeneous(model))
    if basis.shape[1] != 1:
        raise NumericalError(f"Null space of A has dimension {basis.shape[1]}; no unique stationary law.")
    p = basis[:, 0] / basis[:, 0].sum()
    return _project(p)[0]


def expm_oracle(model: ChainModel, p0: Initial, times: np.ndarray) -> Trajectory:
    """
    Exact transient law ``exp(A (t - t_0)) p0`` of a homogeneous chain.

    Examples
    --------
    >>> m = ChainModel.birth_death(1, birth={0: 1.0}, death={1: 1.0})
    >>> traj = expm_oracle(m, 0, np.array([0.0, 1.0]))
    >>> round(float(traj.final[1]), 12) == round(0.5 - 0.5 * float(np.exp(-2.0)), 12)
    True
    """
    A = _require_homogeneous(model)
    times = np.asarray(times, dtype=float)
    start = initial_distribution(model.S, p0)
    states = np.vstack([expm(A * (t - times[0])) @ start for t in times])
    return Trajectory(times, np.vstack([_project(p)[0] for p in states]), p0, 0.0, "expm")


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """
    Outcome of checking a certificate against two transient solutions.

    Parameters
    ----------
    certificate : BoundCertificate
        Checked certificate.
    times : np.ndarray
        Output times.
    observed_ratio : np.ndarray
        ``||w(t)|| / ||w(t0)||``.
    envelope : np.ndarray
        ``C exp(-int_t0^t rate)``.
    max_violation : float
        Largest ``(observed_ratio - envelope) / envelope``; not above 1e-6 when passing.
    t_star : float, optional
        Certified time to reach ``delta``, None if the rate mean is not positive.
    delta : float
        Discrepancy used for ``t_star``.
    lower_violation : float, optional
        Largest amount by which the observation falls below the lower envelope.
    """

    certificate: BoundCertificate
    times: np.ndarray
    observed_ratio: np.ndarray
    envelope: np.ndarray
    max_violation: float
    t_star: Optional[float]
    delta: float
    lower_violation: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.max_violation <= VIOLATION_TOLERANCE

    @property
    def max_slack(self) -> float:
        """Largest relative gap between the envelope and the observation."""
        return float(np.max((self.envelope - self.observed_ratio) / np.maximum(self.envelope, TINY_ENVELOPE)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "observed": self.observed_ratio, "bound": self.envelope})

    def to_record(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "method": self.certificate.method.value,
            "max_violation": self.max_violation,
            "lower_violation": self.lower_violation,
            "t_star": self.t_star,
            "delta": self.delta,
            "horizon": [float(self.times[0]), float(self.times[-1])],
            "points": int(self.times.size),
            "model_hash": self.certificate.model_hash,
        }


def _recheck(model: ChainModel, cert: BoundCertificate) -> None:
    if cert.model_hash and cert.model_hash != model_hash(model):
        raise InvalidParameterError("Certificate was computed for another model.")
    if cert.method is Method.LOGNORM:
        value, i, j, t = offdiagonal_minimum(build_Bstar(model))
        if value < -DRIFT_TOLERANCE:
            raise HypothesisError(f"B*(t) is not essentially non-negative at ({i + 1}, {j + 1}), t={t:.4g}.")


def validate_certificate(
    model: ChainModel,
    cert: BoundCertificate,
    p0a: Initial = 0,
    p0b: Optional[Initial] = None,
    horizon: Optional[tuple[float, float]] = None,
    tol: float = 1e-10,
    points: int = 401,
    delta: float = 1e-3,
    initial_gap: Optional[float] = None,
) -> ConvergenceReport:
    """
    Check ``||w(t)|| <= C exp(-int rate) ||w(t0)||`` on two transient solutions.

    Parameters
    ----------
    model : ChainModel
        Model the certificate was computed for.
    cert : BoundCertificate
        Certificate to check.
    p0a, p0b : int, str or np.ndarray, optional
        Initial laws, default the states ``0`` and ``S``.
    horizon : tuple of float, optional
        Check interval, default ``(valid_from, valid_from + 2)``.
    tol : float, optional
        Solver tolerance, default 1e-10.
    points : int, optional
        Output grid size, default 401.
    delta : float, optional
        Discrepancy for the certified ``t*``.
    initial_gap : float, optional
        Bound on the initial distance used for ``t*``; the certificate-norm
        diameter of the simplex by default.

    Raises
    ------
    InvalidParameterError
        On a model hash mismatch or identical initial laws.
    HypothesisError
        If the hypothesis of the producing method fails for ``model``.

    Examples
    --------
    >>> from ctmc.bounds.methods.lognorm import decay_parameter_bound
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> report = validate_certificate(m, decay_parameter_bound(m), horizon=(0.0, 1.0), points=11)
    >>> report.passed, report.max_slack < 1e-6
    (True, True)
    """
    _recheck(model, cert)
    t0, t1 = horizon if horizon is not None else (cert.valid_from, cert.valid_from + 2.0)
    if t0 < cert.valid_from:
        raise InvalidParameterError(f"Certificate holds from t={cert.valid_from}, check starts at {t0}.")
    traj_a = solve_kolmogorov(model, p0a, (t0, t1), tol=tol, points=points)
    traj_b = solve_kolmogorov(model, model.S if p0b is None else p0b, (t0, t1), tol=tol, points=points)
    w = cert.coordinates(traj_a.states[:, 1:] - traj_b.states[:, 1:])
    norms = cert.measure(w)
    if norms[0] == 0.0:
        raise InvalidParameterError("Initial laws give w(t0) = 0; nothing to check.")
    observed = norms / norms[0]
    envelope = np.asarray(cert.bound_factor(traj_a.times, s=t0))
    violation = float(np.max((observed - envelope) / np.maximum(envelope, TINY_ENVELOPE)))
    lower_violation = None
    if cert.lower_rate is not None and (np.all(w[0] >= 0.0) or np.all(w[0] <= 0.0)):
        lower_violation = float(np.max(np.asarray(cert.lower_factor(traj_a.times, s=t0)) - observed))
    t_star = find_tstar(cert, initial_gap, delta, S=model.S) if cert.is_ergodic else None
    logger.info("certificate %s: max violation %.3e", cert.method.value, violation)
    return ConvergenceReport(
        certificate=cert,
        times=traj_a.times,
        observed_ratio=observed,
        envelope=envelope,
        max_violation=violation,
        t_star=t_star,
        delta=delta,
        lower_violation=lower_violation,
    )


def _bisect(cert: BoundCertificate, target: float, lo: float, hi: float) -> float:
    start = cert.valid_from
    while hi - lo > TSTAR_TOLERANCE * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if cert.rate.integral(start, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def find_tstar(
    cert: BoundCertificate, initial_gap: Optional[float] = None, delta: float = 1e-3, S: Optional[int] = None
) -> float:
    """
    Smallest ``t`` with ``C exp(-int_s^t rate) initial_gap <= delta``.

    Without ``initial_gap`` the certificate-norm diameter of the simplex on
    ``0..S`` is used; ``S`` defaults to the number of certificate weights.

    Raises
    ------
    InvalidParameterError
        If neither ``initial_gap`` nor the state space is known.
    NumericalError
        If the rate mean is not positive.

    Examples
    --------
    >>> cert = BoundCertificate(Method.LOGNORM, RateFunction(2.0), 1.0, "l1", None)
    >>> round(find_tstar(cert, 2.0, 1e-3), 10) == round(float(np.log(2000.0) / 2.0), 10)
    True
    """
    if initial_gap is None:
        if S is None:
            if cert.weights is None:
                raise InvalidParameterError("Either initial_gap or S is needed for an unweighted certificate.")
            S = cert.weights.size
        initial_gap = cert.diameter(S)
    if not (initial_gap > 0.0 and delta > 0.0):
        raise InvalidParameterError("initial_gap and delta must be positive.")
    start = cert.valid_from
    target = math.log(cert.constant) + math.log(initial_gap) - math.log(delta)
    if target <= 0.0:
        return start
    mean = cert.mean_rate
    if not mean > 0.0:
        raise NumericalError(f"Rate mean {mean:.4g} is not positive; no finite t*.")
    if isinstance(cert.rate, RateFunction) and cert.rate.is_constant:
        return start + target / mean
    chunk = max(1, min(MAX_SCAN_PERIODS, math.ceil(target / mean) + 1))
    lo = start
    while lo - start < MAX_SCAN_PERIODS:
        grid = np.linspace(lo, lo + chunk, chunk * SCAN_POINTS_PER_PERIOD + 1)
        values = np.asarray(cert.rate.integral(start, grid))
        hits = np.nonzero(values >= target)[0]
        if hits.size:
            k = int(hits[0])
            return grid[0] if k == 0 else _bisect(cert, target, float(grid[k - 1]), float(grid[k]))
        lo = float(grid[-1])
    raise NumericalError(f"No t* within {MAX_SCAN_PERIODS} periods.")


def limiting_regime(
    model: ChainModel,
    cert: BoundCertificate,
    delta: float = 1e-3,
    initial_gap: Optional[float] = None,
    tol: float = DEFAULT_TOLERANCE,
    points: int = 201,
) -> Trajectory:
    """
    One period ``[t*, t* + 1]`` of the solution started from state ``0``.

    Within ``delta`` of the periodic limiting regime in the certificate norm.

    Examples
    --------
    >>> from ctmc.bounds.methods.lognorm import decay_parameter_bound
    >>> m = ChainModel.birth_death(1, birth={0: 1.0}, death={1: 3.0})
    >>> regime = limiting_regime(m, decay_parameter_bound(m), delta=1e-9, tol=1e-12, points=3)
    >>> np.allclose(regime.final, [0.75, 0.25], atol=1e-8)
    True
    """
    t_star = find_tstar(cert, initial_gap, delta, S=model.S)
    start: Initial = 0
    if t_star > 0.0:
        start = solve_kolmogorov(model, 0, (0.0, t_star), tol=tol).final
    logger.info("limiting regime from t*=%.6g", t_star)
    regime = solve_kolmogorov(model, start, (t_star, t_star + 1.0), tol=tol, points=points)
    return Trajectory(regime.times, regime.states, 0, tol, regime.method)
