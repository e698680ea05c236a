"""
Separable Matérn 5/2 correlation and its Cholesky-factored matrix form.

Correlation matrices are built one dimension at a time (n×n working memory,
never n×n×d) and factorized with an escalating jitter ladder.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from config import DEFAULT_JITTER, MAX_JITTER, JITTER_GROWTH
from src.errors import InvalidArgumentError, IllConditionedError

logger = logging.getLogger("Kernel")

SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class CorrelationParams:
    """Per-dimension length-scales theta (all > 0)."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=np.float64)).copy()
        if theta.ndim != 1 or theta.size == 0:
            raise InvalidArgumentError("theta must be a non-empty 1-D vector")
        if not np.all(np.isfinite(theta)) or np.any(theta <= 0.0):
            raise InvalidArgumentError(f"every theta_j must be finite and > 0, got {theta}")
        theta.setflags(write=False)
        object.__setattr__(self, 'theta', theta)

    @property
    def d(self) -> int:
        return self.theta.size


def matern52(h, theta_j):
    """
    One-dimensional Matérn correlation with smoothness 5/2.

    (1 + √5·u + 5u²/3)·exp(−√5·u) with u = h/θ_j. Accepts scalars or arrays
    (broadcast); returns a float for scalar input.
    """
    h_arr = np.asarray(h, dtype=np.float64)
    t_arr = np.asarray(theta_j, dtype=np.float64)
    if not (np.all(np.isfinite(h_arr)) and np.all(np.isfinite(t_arr))):
        raise InvalidArgumentError("matern52 needs finite distance and length-scale")
    if np.any(h_arr < 0.0):
        raise InvalidArgumentError("distance h must be non-negative")
    if np.any(t_arr <= 0.0):
        raise InvalidArgumentError("length-scale theta_j must be positive")
    u = SQRT5 * h_arr / t_arr
    value = (1.0 + u + u * u / 3.0) * np.exp(-u)
    return float(value) if value.ndim == 0 else value


def _as_points(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be a d-vector or an n×d array")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return arr


def correlation(x, x2, params: CorrelationParams) -> float:
    """Separable correlation between two d-vectors."""
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(x2, dtype=np.float64).ravel()
    if a.size != b.size or a.size != params.d:
        raise InvalidArgumentError(
            f"dimension mismatch: {a.size} vs {b.size} (theta has {params.d})"
        )
    return float(np.prod(matern52(np.abs(a - b), params.theta)))


def cross_correlation(A, B, params: CorrelationParams) -> np.ndarray:
    """
    Correlation matrix between the rows of A (m×d) and B (n×d), shape m×n.

    Accumulates the product dimension by dimension; |a−b| is exactly
    symmetric in IEEE arithmetic so cross_correlation(X, X) is exactly
    symmetric with a unit diagonal.
    """
    A = _as_points(A, "A")
    B = _as_points(B, "B")
    if A.shape[1] != params.d or B.shape[1] != params.d:
        raise InvalidArgumentError(
            f"points have d={A.shape[1]}/{B.shape[1]} but theta has {params.d}"
        )
    out = np.ones((A.shape[0], B.shape[0]))
    for j in range(params.d):
        u = np.abs(A[:, j, np.newaxis] - B[np.newaxis, :, j]) * (SQRT5 / params.theta[j])
        out *= (1.0 + u + u * u / 3.0) * np.exp(-u)
    return out


@dataclass(frozen=True)
class CorrelationFactor:
    """Lower Cholesky factor L of R + jitter·I, with the jitter actually used."""

    chol: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return self.chol.shape[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        """(R + jitter·I)^-1 b."""
        return linalg.cho_solve((self.chol, True), b, check_finite=False)

    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.n))

    def matrix(self) -> np.ndarray:
        """Reassembled L·Lᵀ (diagnostics and tests)."""
        return self.chol @ self.chol.T


def _try_cholesky(R: np.ndarray) -> np.ndarray | None:
    try:
        L = linalg.cholesky(R, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None
    # LAPACK accepts pivots that are only rounding noise (e.g. duplicated rows
    # with zero jitter); treat those as failures too.
    pivots = np.diag(L)
    if not np.all(np.isfinite(pivots)) or np.min(pivots) ** 2 <= R.shape[0] * np.finfo(float).eps:
        return None
    return L


def factorize(R: np.ndarray, jitter: float = DEFAULT_JITTER,
              max_jitter: float = MAX_JITTER) -> CorrelationFactor:
    """
    Cholesky-factorize R + jitter·I, escalating jitter ×JITTER_GROWTH on failure
    until it would exceed max_jitter. jitter = 0 is tried once, never escalated.
    """
    if jitter < 0.0:
        raise InvalidArgumentError("jitter must be >= 0")
    n = R.shape[0]
    current = float(jitter)
    while True:
        L = _try_cholesky(R + current * np.eye(n)) if current > 0.0 else _try_cholesky(R)
        if L is not None:
            if current > jitter:
                logger.debug(f"factorized n={n} after escalating jitter to {current:.1e}")
            return CorrelationFactor(chol=L, jitter=current)
        nxt = current * JITTER_GROWTH
        if current == 0.0 or nxt > max_jitter * (1.0 + 1e-12):
            raise IllConditionedError(f"correlation matrix (n={n}) is not positive definite", current)
        current = nxt


def corr_matrix(design, params: CorrelationParams, jitter: float = DEFAULT_JITTER,
                max_jitter: float = MAX_JITTER) -> CorrelationFactor:
    """Correlation matrix of a design, returned in Cholesky-factored form."""
    X = _as_points(design, "design")
    if X.shape[0] < 1:
        raise InvalidArgumentError("design needs at least one point")
    return factorize(cross_correlation(X, X, params), jitter=jitter, max_jitter=max_jitter)


__all__ = [
    'CorrelationParams', 'CorrelationFactor', 'matern52', 'correlation',
    'cross_correlation', 'factorize', 'corr_matrix',
]
