"""Module building the matrices of the forward Kolmogorov system and its reductions.

Conventions: ``A(t)`` is the transposed intensity matrix on ``{0, ..., S}``,
``B(t)`` the reduced matrix on ``{1, ..., S}``, ``B*(t) = T B(t) T^-1`` and
``B**(t) = D B*(t) D^-1`` for a diagonal weight matrix ``D``. All matrix
functions are stored as coefficient matrices of a trigonometric polynomial
with period one, so linear maps are applied once per coefficient.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ctmc.bounds._utils.exceptions import InvalidParameterError, NumericalError
from ctmc.bounds._utils.utils import DEFAULT_PERIOD_POINTS, period_grid
from ctmc.bounds.model.processing import ensure_valid
from ctmc.bounds.model.structures import TWO_PI, ChainClass, ChainModel, RateFunction

ENTRY_TOLERANCE = 1e-10
NONNEGATIVITY_TOLERANCE = -1e-12
SAMPLE_BLOCK = 4_000_000

Grid = Optional[Union[Sequence[float], np.ndarray]]


@dataclass(frozen=True, eq=False)
class DenseMatrixFn:
    """
    Square matrix whose entries are trigonometric polynomials of time.

    ``M(t) = constant + sum_k [sin(2 pi k t) sin_k + cos(2 pi k t) cos_k]``.

    Parameters
    ----------
    constant : np.ndarray
        Constant coefficient matrix.
    harmonics : tuple of (int, np.ndarray, np.ndarray)
        ``(k, sin_k, cos_k)`` coefficient matrices, sorted by ``k``.

    Examples
    --------
    >>> M = DenseMatrixFn(np.eye(2), ((1, np.eye(2), np.zeros((2, 2))),))
    >>> M.at(0.25)
    array([[2., 0.],
           [0., 2.]])
    >>> M.dim, M.is_constant
    (2, False)
    """

    constant: np.ndarray
    harmonics: tuple[tuple[int, np.ndarray, np.ndarray], ...] = ()

    def __post_init__(self) -> None:
        constant = np.array(self.constant, dtype=float)
        if constant.ndim != 2 or constant.shape[0] != constant.shape[1]:
            raise InvalidParameterError(f"Coefficient matrix must be square, got shape {constant.shape}.")
        harmonics = []
        for k, s, c in sorted(self.harmonics, key=lambda h: h[0]):
            s, c = np.array(s, dtype=float), np.array(c, dtype=float)
            if s.shape != constant.shape or c.shape != constant.shape:
                raise InvalidParameterError(f"Harmonic {k} has mismatching shape.")
            if np.any(s) or np.any(c):
                harmonics.append((int(k), s, c))
        object.__setattr__(self, "constant", constant)
        object.__setattr__(self, "harmonics", tuple(harmonics))

    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[tuple[int, int, RateFunction]]) -> DenseMatrixFn:
        """
        Accumulate ``(row, col, rate)`` contributions into a matrix function.

        Examples
        --------
        >>> M = DenseMatrixFn.from_entries(2, [(0, 1, RateFunction(3.0)), (0, 1, RateFunction(1.0))])
        >>> float(M.at(0.0)[0, 1])
        4.0
        """
        constant = np.zeros((dim, dim))
        sin_parts: dict[int, np.ndarray] = {}
        cos_parts: dict[int, np.ndarray] = {}
        for row, col, rate in entries:
            constant[row, col] += rate.constant
            for k, s, c in rate.harmonics:
                sin_parts.setdefault(k, np.zeros((dim, dim)))[row, col] += s
                cos_parts.setdefault(k, np.zeros((dim, dim)))[row, col] += c
        return cls(constant, tuple((k, sin_parts[k], cos_parts[k]) for k in sorted(sin_parts)))

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    @property
    def is_constant(self) -> bool:
        return not self.harmonics

    def coefficients(self) -> Iterator[np.ndarray]:
        """Iterate over every coefficient matrix."""
        yield self.constant
        for _, s, c in self.harmonics:
            yield s
            yield c

    def at(self, t: float) -> np.ndarray:
        """Evaluate the matrix at time ``t``."""
        out = self.constant.copy()
        for k, s, c in self.harmonics:
            out += np.sin(TWO_PI * k * t) * s + np.cos(TWO_PI * k * t) * c
        return out

    def sample(self, grid: Grid = None) -> np.ndarray:
        """
        Evaluate on a time grid.

        Parameters
        ----------
        grid : array_like, optional
            Time instants, default is the uniform period grid.

        Returns
        -------
        np.ndarray
            Array of shape ``(len(grid), dim, dim)``.
        """
        times = period_grid(DEFAULT_PERIOD_POINTS) if grid is None else np.asarray(grid, dtype=float)
        out = np.broadcast_to(self.constant, (times.size, self.dim, self.dim)).copy()
        for k, s, c in self.harmonics:
            out += np.sin(TWO_PI * k * times)[:, None, None] * s + np.cos(TWO_PI * k * times)[:, None, None] * c
        return out

    def map(self, func: Callable[[np.ndarray], np.ndarray]) -> DenseMatrixFn:
        """Apply a linear map to every coefficient matrix."""
        return DenseMatrixFn(func(self.constant), tuple((k, func(s), func(c)) for k, s, c in self.harmonics))

    def transform(self, left: np.ndarray, right: np.ndarray) -> DenseMatrixFn:
        """
        Return ``left @ M(t) @ right``.

        Examples
        --------
        >>> T, T_inv = transform_T(2)
        >>> DenseMatrixFn(np.eye(2)).transform(T, T_inv).at(0.0)
        array([[1., 0.],
               [0., 1.]])
        """
        return self.map(lambda m: left @ m @ right)

    def scale(self, factors: np.ndarray) -> DenseMatrixFn:
        """Multiply every entry by the matching entry of ``factors``."""
        return self.map(lambda m: m * factors)

    def support(self) -> np.ndarray:
        """Boolean mask of entries that are not identically zero."""
        mask = np.zeros(self.constant.shape, dtype=bool)
        for coefficient in self.coefficients():
            mask |= coefficient != 0.0
        return mask

    def entry(self, i: int, j: int) -> RateFunction:
        """
        Entry ``(i, j)`` as a trigonometric polynomial (0-based indices).

        Examples
        --------
        >>> build_Bstar(ChainModel.birth_death(1, birth={0: 2}, death={1: 3})).entry(0, 0).constant
        -5.0
        """
        return RateFunction(
            float(self.constant[i, j]), tuple((k, float(s[i, j]), float(c[i, j])) for k, s, c in self.harmonics)
        )

    def diagonal(self) -> list[RateFunction]:
        """Diagonal entries as trigonometric polynomials."""
        return [self.entry(i, i) for i in range(self.dim)]

    def column_sums(self) -> list[RateFunction]:
        """Column sums as trigonometric polynomials."""
        return [
            RateFunction(
                float(self.constant[:, j].sum()),
                tuple((k, float(s[:, j].sum()), float(c[:, j].sum())) for k, s, c in self.harmonics),
            )
            for j in range(self.dim)
        ]


@dataclass(frozen=True)
class WeightVector:
    """
    Diagonal similarity weights ``d_1, ..., d_S``.

    Magnitudes are stored as natural logarithms so that geometric weights
    such as ``d_{k+1} = 90 d_k`` stay representable for long chains.

    Parameters
    ----------
    log_magnitude : tuple of float
        ``log |d_i|``.
    signs : tuple of int
        ``sign(d_i)``, all ``+1`` unless ``signed``.
    signed : bool
        Whether negative weights are allowed.

    Examples
    --------
    >>> w = WeightVector.of([1.0, 2.0])
    >>> w.d
    array([1., 2.])
    >>> WeightVector.of([1.0, -0.5], signed=True).signs
    (1, -1)
    """

    log_magnitude: tuple[float, ...]
    signs: tuple[int, ...]
    signed: bool = False

    def __post_init__(self) -> None:
        logs = tuple(float(v) for v in self.log_magnitude)
        signs = tuple(int(v) for v in self.signs)
        if not logs or len(logs) != len(signs):
            raise InvalidParameterError("Weights and signs must be non-empty and of equal length.")
        if not all(np.isfinite(logs)):
            raise InvalidParameterError("Weights must be finite and nonzero.")
        if any(s not in (-1, 1) for s in signs):
            raise InvalidParameterError("Weight signs must be +1 or -1.")
        if not self.signed and any(s < 0 for s in signs):
            raise InvalidParameterError("Unsigned weights must be positive.")
        object.__setattr__(self, "log_magnitude", logs)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def of(cls, d: Sequence[float], signed: bool = False) -> WeightVector:
        """Build from plain weight values."""
        values = np.asarray(d, dtype=float)
        if np.any(values == 0.0):
            raise InvalidParameterError("Zero weight is not allowed.")
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(values))
        return cls(tuple(logs), tuple(int(s) for s in np.sign(values)), signed)

    @classmethod
    def from_log(
        cls, log_magnitude: Sequence[float], signs: Optional[Sequence[int]] = None, signed: bool = False
    ) -> WeightVector:
        """Build from log-magnitudes."""
        logs = tuple(float(v) for v in log_magnitude)
        return cls(logs, tuple(signs) if signs is not None else (1,) * len(logs), signed)

    @classmethod
    def ones(cls, S: int) -> WeightVector:
        """Unit weights."""
        return cls((0.0,) * S, (1,) * S)

    @property
    def size(self) -> int:
        return len(self.log_magnitude)

    @property
    def d(self) -> np.ndarray:
        """Weight values; entries beyond the float range become infinite."""
        with np.errstate(over="ignore"):
            return np.asarray(self.signs, dtype=float) * np.exp(np.asarray(self.log_magnitude))

    def normalized(self) -> np.ndarray:
        """
        Weights rescaled so that the largest magnitude is one.

        Examples
        --------
        >>> WeightVector.of([1.0, 4.0]).normalized()
        array([0.25, 1.  ])
        """
        logs = np.asarray(self.log_magnitude)
        return np.asarray(self.signs, dtype=float) * np.exp(logs - logs.max())

    def spread(self) -> float:
        """Ratio ``max |d_i| / min |d_i|``."""
        logs = np.asarray(self.log_magnitude)
        with np.errstate(over="ignore"):
            return float(np.exp(logs.max() - logs.min()))

    def as_list(self) -> list[float]:
        return [float(v) for v in self.d]


def transform_T(S: int) -> tuple[np.ndarray, np.ndarray]:
    """
    All-ones upper triangular matrix ``T`` and its inverse.

    Examples
    --------
    >>> T, T_inv = transform_T(2)
    >>> T
    array([[1., 1.],
           [0., 1.]])
    >>> T_inv
    array([[ 1., -1.],
           [ 0.,  1.]])
    """
    if S < 1:
        raise InvalidParameterError(f"S must be at least 1, got {S}.")
    return np.triu(np.ones((S, S))), np.eye(S) - np.eye(S, k=1)


def build_A(model: ChainModel) -> DenseMatrixFn:
    """
    Transposed intensity matrix of the forward Kolmogorov system.

    Parameters
    ----------
    model : ChainModel
        Valid chain model.

    Returns
    -------
    DenseMatrixFn
        ``a_ij(t) = q_ji(t)`` with zero column sums, dimension ``S + 1``.

    Raises
    ------
    ModelValidationError
        If the model is invalid.

    Examples
    --------
    >>> build_A(ChainModel.birth_death(1, birth={0: 2}, death={1: 3})).at(0.0)
    array([[-2.,  3.],
           [ 2., -3.]])
    """
    ensure_valid(model)
    entries = []
    for i, j, rate in model.transitions():
        entries.append((j, i, rate))
        entries.append((i, i, -1.0 * rate))
    return DenseMatrixFn.from_entries(model.S + 1, entries)


def build_B(model: ChainModel) -> DenseMatrixFn:
    """
    Reduced matrix ``b_ij = a_ij - a_i0`` on states ``1..S``.

    Examples
    --------
    >>> build_B(ChainModel.birth_death(1, birth={0: 2}, death={1: 3})).at(0.0)
    array([[-5.]])
    """
    return build_A(model).map(lambda m: m[1:, 1:] - m[1:, [0]])


def build_Bstar(model: ChainModel) -> DenseMatrixFn:
    """
    Return ``B*(t) = T B(t) T^-1``.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 2}, death={1: 3, 2: 4})
    >>> build_Bstar(m).at(0.0)
    array([[-4.,  3.],
           [ 2., -6.]])
    """
    T, T_inv = transform_T(model.S)
    return build_B(model).transform(T, T_inv)


def weight_conjugate(Bstar: DenseMatrixFn, d: WeightVector, allow_signed: bool = False) -> DenseMatrixFn:
    """
    Return ``D B* D^-1``: entry ``(i, j)`` multiplied by ``d_i / d_j``.

    Parameters
    ----------
    Bstar : DenseMatrixFn
        Matrix to conjugate.
    d : WeightVector
        Weights, positive unless ``allow_signed``.
    allow_signed : bool, optional
        Accept signed weights, default is False.

    Raises
    ------
    InvalidParameterError
        If the weights are signed without ``allow_signed`` or have the wrong size.
    NumericalError
        If a ratio on a nonzero entry overflows.

    Examples
    --------
    >>> Bstar = DenseMatrixFn(np.array([[-2.0, 8.0], [2.0, -9.0]]))
    >>> weight_conjugate(Bstar, WeightVector.of([1.0, 2.0])).at(0.0)
    array([[-2.,  4.],
           [ 4., -9.]])
    """
    if d.signed and not allow_signed:
        raise InvalidParameterError("Signed weights are only used by the differential-inequality method.")
    if d.size != Bstar.dim:
        raise InvalidParameterError(f"Expected {Bstar.dim} weights, got {d.size}.")
    mask = Bstar.support()
    logs = np.asarray(d.log_magnitude)
    signs = np.asarray(d.signs, dtype=float)
    exponent = np.where(mask, logs[:, None] - logs[None, :], 0.0)
    with np.errstate(over="ignore"):
        ratio = np.where(mask, np.outer(signs, signs) * np.exp(exponent), 0.0)
    if not np.all(np.isfinite(ratio)):
        raise NumericalError("Weight ratio overflows on a nonzero matrix entry.")
    return Bstar.scale(ratio)


def offdiagonal_minimum(M: DenseMatrixFn, grid: Grid = None) -> tuple[float, int, int, float]:
    """
    Most negative off-diagonal entry over a time grid.

    Returns
    -------
    tuple
        ``(value, i, j, t)`` with 0-based indices.
    """
    times = np.array([0.0]) if M.is_constant else (period_grid(DEFAULT_PERIOD_POINTS) if grid is None else grid)
    times = np.asarray(times, dtype=float)
    if M.dim == 1:
        return 0.0, 0, 0, float(times[0])
    diag = np.arange(M.dim)
    chunk = max(1, SAMPLE_BLOCK // (M.dim * M.dim))
    best = (np.inf, 0, 0, float(times[0]))
    for start in range(0, times.size, chunk):
        off = M.sample(times[start : start + chunk])
        off[:, diag, diag] = np.inf
        g, i, j = np.unravel_index(int(np.argmin(off)), off.shape)
        if off[g, i, j] < best[0]:
            best = (float(off[g, i, j]), int(i), int(j), float(times[start + g]))
    return best


def is_essentially_nonnegative(M: DenseMatrixFn, grid: Grid = None) -> bool:
    """
    Whether all off-diagonal entries are at least ``-1e-12`` on the grid.

    Examples
    --------
    >>> is_essentially_nonnegative(DenseMatrixFn(np.array([[-1.0, 0.5], [0.0, -1.0]])))
    True
    >>> is_essentially_nonnegative(DenseMatrixFn(np.array([[-1.0, -0.5], [0.0, -1.0]])))
    False
    """
    return offdiagonal_minimum(M, grid)[0] >= NONNEGATIVITY_TOLERANCE


def _series(model: ChainModel, family: str, keys: Iterable[int]) -> RateFunction:
    total = RateFunction(0.0)
    for key in keys:
        total = total + model.rate(family, key)
    return total


def closed_form_bstar(model: ChainModel) -> DenseMatrixFn:
    """
    Class-specific explicit form of ``B*(t)`` for a finite state space.

    The production path is always ``build_Bstar``; this form is the
    independent reference it is checked against.

    Examples
    --------
    >>> m = ChainModel.batch_service(2, birth={0: 1, 1: 1}, services={1: 3, 2: 1})
    >>> closed_form_bstar(m).at(0.0)
    array([[-4.,  2.],
           [ 1., -5.]])
    """
    S = model.S
    a = lambda k: model.rate("arrival_batch", k)  # noqa: E731
    b = lambda k: model.rate("service_batch", k)  # noqa: E731
    lam = lambda k: model.rate("birth", k)  # noqa: E731
    mu = lambda k: model.rate("death", k)  # noqa: E731
    entries: list[tuple[int, int, RateFunction]] = []
    cls = model.chain_class
    for j in range(1, S + 1):
        for i in range(1, S + 1):
            if cls is ChainClass.BIRTH_DEATH:
                if i == j:
                    value = -1.0 * (lam(i - 1) + mu(i))
                elif j == i + 1:
                    value = mu(i)
                elif i == j + 1:
                    value = lam(j)
                else:
                    continue
            elif cls is ChainClass.BATCH_ARRIVAL:
                if i == j:
                    value = -1.0 * (mu(j) + _series(model, "arrival_batch", range(1, S - j + 2)))
                elif i > j:
                    value = a(i - j) - a(S - j + 1)
                elif i == j - 1:
                    value = mu(j - 1)
                else:
                    continue
            elif cls is ChainClass.BATCH_SERVICE:
                if i == j:
                    value = -1.0 * (lam(j - 1) + _series(model, "service_batch", range(1, j + 1)))
                elif i < j:
                    value = b(j - i) - b(j)
                elif i == j + 1:
                    value = lam(j)
                else:
                    continue
            else:
                if i == j:
                    value = -1.0 * (
                        _series(model, "service_batch", range(1, j + 1))
                        + _series(model, "arrival_batch", range(1, S - j + 2))
                    )
                elif i < j:
                    value = b(j - i) - b(j)
                else:
                    value = a(i - j) - a(S - j + 1)
            entries.append((i - 1, j - 1, value))
    return DenseMatrixFn.from_entries(S, entries)


def dump_csv(M: DenseMatrixFn, t: float, path: Union[str, Path]) -> Path:
    """
    Write ``M(t)`` row-major to CSV with a ``dim``/``t`` header line.

    Examples
    --------
    >>> import tempfile, pathlib
    >>> with tempfile.TemporaryDirectory() as tmp:
    ...     out = dump_csv(DenseMatrixFn(np.eye(2)), 0.5, pathlib.Path(tmp) / "m.csv")
    ...     out.read_text().splitlines()[0]
    '# dim=2,t=0.5'
    """
    path = Path(path)
    np.savetxt(path, M.at(t), delimiter=",", fmt="%.17g", header=f"dim={M.dim},t={t!r}")
    return path
