"""
Dense Gaussian-process regression: concentrated maximum likelihood and BLUP
prediction on top of the Matérn 5/2 kernel.

Every fit works in the unit box of its own (region-local) coordinates. The
likelihood used is the standard Gaussian form

    ℓ(β, σ², θ) = −(n/2)·log(2πσ²) − ½·log det R − (1/2σ²)(y − Fβ)ᵀR⁻¹(y − Fβ)

which, with β̂(θ) and σ̂²(θ) substituted, concentrates to
−(n/2)·log(2πσ̂²) − ½·log det R − n/2.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from config import (
    DEFAULT_JITTER, THETA_BOUNDS, FIT_MULTISTARTS, FIT_MAX_EVALS,
    FIT_XATOL, FIT_FATOL, DEGENERATE_SIGMA2_RTOL, PREDICT_CHUNK,
)
from src.core.kernel import CorrelationParams, CorrelationFactor, corr_matrix, cross_correlation
from src.errors import (
    InvalidArgumentError, IllConditionedError, DegenerateTrendError, InsufficientDataError,
)

logger = logging.getLogger("Fit")

_PENALTY = 1e300   # objective value for theta where R cannot be factorized


class TrendKind(enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"


@dataclass(frozen=True)
class TrendBasis:
    """Mean-trend covariates: Constant → [1]; Linear → [1, x_1, …, x_d]."""

    kind: TrendKind = TrendKind.CONSTANT
    d: int = 1

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, 'kind', TrendKind(self.kind.lower()))
        if self.d < 1:
            raise InvalidArgumentError("trend basis dimension must be >= 1")

    @property
    def p(self) -> int:
        return 1 if self.kind is TrendKind.CONSTANT else self.d + 1

    def evaluate(self, X) -> np.ndarray:
        """n×p covariate matrix F."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.d:
            raise InvalidArgumentError(f"basis expects d={self.d}, got {X.shape[1]}")
        ones = np.ones((X.shape[0], 1))
        if self.kind is TrendKind.CONSTANT:
            return ones
        return np.hstack([ones, X])


@dataclass(frozen=True)
class FitConfig:
    """Numerical settings for maximum-likelihood fitting."""

    jitter: float = DEFAULT_JITTER
    theta_bounds: tuple[float, float] = THETA_BOUNDS
    multistarts: int = FIT_MULTISTARTS
    max_evals: int = FIT_MAX_EVALS
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.theta_bounds
        if self.jitter < 0.0:
            raise InvalidArgumentError("jitter must be >= 0")
        if not (0.0 < lo < hi):
            raise InvalidArgumentError(f"theta_bounds must satisfy 0 < lo < hi, got {self.theta_bounds}")
        if self.multistarts < 1:
            raise InvalidArgumentError("multistarts must be >= 1")
        if self.max_evals < 1:
            raise InvalidArgumentError("max_evals must be >= 1")


@dataclass(frozen=True)
class TrainedGP:
    """
    A fitted GP, immutable after construction.

    ``design`` is in the fitting region's local coordinates. ``weights`` solve
    R·w = y − F·β̂. ``jitter`` is the diagonal inflation actually used (after
    escalation). ``degenerate`` marks σ̂² = 0: the model returns β̂-trend with
    zero standard error.
    """

    design: np.ndarray
    responses: np.ndarray
    basis: TrendBasis
    theta: CorrelationParams
    beta: np.ndarray
    sigma2: float
    chol: np.ndarray
    weights: np.ndarray
    jitter: float
    loglik: float
    r_inv_f: np.ndarray = field(repr=False)
    gram_chol: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def d(self) -> int:
        return self.design.shape[1]

    @property
    def degenerate(self) -> bool:
        return self.sigma2 == 0.0

    def factor(self) -> CorrelationFactor:
        return CorrelationFactor(chol=self.chol, jitter=self.jitter)


@dataclass(frozen=True)
class _Profile:
    beta: np.ndarray
    sigma2: float
    weights: np.ndarray     # R⁻¹(y − Fβ̂)
    R_inv_F: np.ndarray
    gram_chol: np.ndarray   # Cholesky factor of FᵀR⁻¹F


def _validate_data(design, y, basis: TrendBasis) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(design, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size:
        raise InvalidArgumentError(f"design has {X.shape[0]} rows but y has {y.size} values")
    if X.shape[1] != basis.d:
        raise InvalidArgumentError(f"design has d={X.shape[1]} but basis expects {basis.d}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError("design and responses must be finite")
    if X.shape[0] < basis.p:
        raise InsufficientDataError(f"n={X.shape[0]} points cannot identify p={basis.p} trend coefficients")
    return X, y


def _profile(factor: CorrelationFactor, F: np.ndarray, y: np.ndarray) -> _Profile:
    n = y.size
    R_inv_F = factor.solve(F)
    gram = F.T @ R_inv_F
    try:
        gram_chol = linalg.cholesky(gram, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        raise DegenerateTrendError(f"F^T R^-1 F is singular: {e}") from e
    if np.min(np.diag(gram_chol)) ** 2 <= gram.shape[0] * np.finfo(float).eps * np.max(np.abs(gram)):
        raise DegenerateTrendError("F^T R^-1 F is numerically singular")

    if np.ptp(y) == 0.0:
        # Constant responses: β̂ = (c, 0, …, 0) exactly, zero residual.
        beta = np.zeros(F.shape[1])
        beta[0] = y[0]
        return _Profile(beta, 0.0, np.zeros(n), R_inv_F, gram_chol)

    beta = linalg.cho_solve((gram_chol, True), R_inv_F.T @ y, check_finite=False)
    resid = y - F @ beta
    weights = factor.solve(resid)
    sigma2 = float(resid @ weights) / n
    floor = (DEGENERATE_SIGMA2_RTOL * max(1.0, float(np.max(np.abs(y))))) ** 2
    if sigma2 <= floor:
        sigma2 = 0.0
    return _Profile(beta, sigma2, weights, R_inv_F, gram_chol)


def _loglik_from(profile: _Profile, factor: CorrelationFactor) -> float:
    n = factor.n
    if profile.sigma2 == 0.0:
        return math.inf
    return -0.5 * n * math.log(2.0 * math.pi * profile.sigma2) - 0.5 * factor.log_det() - 0.5 * n


def profile_estimates(design, y, basis: TrendBasis, params: CorrelationParams,
                      jitter: float = DEFAULT_JITTER) -> tuple[np.ndarray, float]:
    """Generalized-least-squares β̂ and the ML variance σ̂² at fixed θ."""
    X, y = _validate_data(design, y, basis)
    factor = corr_matrix(X, params, jitter)
    prof = _profile(factor, basis.evaluate(X), y)
    return prof.beta, prof.sigma2


def concentrated_loglik(design, y, basis: TrendBasis, params: CorrelationParams,
                        jitter: float = DEFAULT_JITTER) -> float:
    """
    Log-likelihood at (β̂(θ), σ̂²(θ), θ).

    Returns +inf when σ̂² = 0 (the data are interpolated exactly by the
    trend); callers treat that as a degenerate, not a failed, evaluation.
    """
    X, y = _validate_data(design, y, basis)
    factor = corr_matrix(X, params, jitter)
    return _loglik_from(_profile(factor, basis.evaluate(X), y), factor)


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.setflags(write=False)


def build_model(design, y, basis: TrendBasis, params: CorrelationParams,
                jitter: float = DEFAULT_JITTER) -> TrainedGP:
    """Condition a GP on data at fixed θ (no optimization)."""
    X, y = _validate_data(design, y, basis)
    factor = corr_matrix(X, params, jitter)
    prof = _profile(factor, basis.evaluate(X), y)
    X = X.copy()
    y = y.copy()
    _freeze(X, y, prof.beta, prof.weights, factor.chol, prof.R_inv_F, prof.gram_chol)
    return TrainedGP(
        design=X, responses=y, basis=basis, theta=params, beta=prof.beta,
        sigma2=prof.sigma2, chol=factor.chol, weights=prof.weights,
        jitter=factor.jitter, loglik=_loglik_from(prof, factor),
        r_inv_f=prof.R_inv_F, gram_chol=prof.gram_chol,
    )


def _start_points(d: int, config: FitConfig) -> np.ndarray:
    """Log-theta starts: box centre, then a Latin-hypercube spread of the rest."""
    lo, hi = np.log(config.theta_bounds[0]), np.log(config.theta_bounds[1])
    starts = [np.full(d, 0.5 * (lo + hi))]
    extra = config.multistarts - 1
    if extra > 0:
        rng = np.random.default_rng(config.seed)
        strata = np.stack([rng.permutation(extra) for _ in range(d)], axis=1)
        unit = (strata + rng.uniform(size=(extra, d))) / extra
        starts.extend(lo + unit * (hi - lo))
    return np.asarray(starts)


def fit(design, y, basis: TrendBasis | None = None, config: FitConfig | None = None) -> TrainedGP:
    """
    Maximum-likelihood fit of θ by multistart bounded Nelder–Mead in log-θ.

    Raises InsufficientDataError when n < p and IllConditionedError when no
    start point yields a factorizable correlation matrix.
    """
    config = config or FitConfig()
    X0 = np.atleast_2d(np.asarray(design, dtype=np.float64))
    basis = basis or TrendBasis(TrendKind.CONSTANT, X0.shape[1])
    X, y = _validate_data(X0, y, basis)
    n, d = X.shape
    F = basis.evaluate(X)
    log_lo, log_hi = np.log(config.theta_bounds[0]), np.log(config.theta_bounds[1])
    starts = _start_points(d, config)

    def neg_loglik(log_theta: np.ndarray) -> float:
        try:
            params = CorrelationParams(np.exp(np.clip(log_theta, log_lo, log_hi)))
            factor = corr_matrix(X, params, config.jitter)
            ll = _loglik_from(_profile(factor, F, y), factor)
        except (IllConditionedError, DegenerateTrendError):
            return _PENALTY
        return -_PENALTY if ll == math.inf else -ll

    # Degenerate data (σ̂² = 0 at any θ, e.g. constant y) need no search.
    first = neg_loglik(starts[0])
    if first == -_PENALTY:
        logger.debug(f"n={n}: degenerate responses, theta fixed at box centre")
        return build_model(X, y, basis, CorrelationParams(np.exp(starts[0])), config.jitter)

    best_x, best_f = None, _PENALTY
    bounds = [(log_lo, log_hi)] * d
    for i, x0 in enumerate(starts):
        res = optimize.minimize(
            neg_loglik, x0, method="Nelder-Mead", bounds=bounds,
            options={'maxfev': config.max_evals, 'xatol': FIT_XATOL, 'fatol': FIT_FATOL},
        )
        if res.fun < best_f:
            best_x, best_f = np.clip(res.x, log_lo, log_hi), float(res.fun)
        logger.debug(f"start {i}: -loglik={res.fun:.6g} after {res.nfev} evals")

    if best_x is None:
        raise IllConditionedError(
            f"no start point gave a factorizable correlation matrix (n={n}, d={d})", config.jitter
        )
    model = build_model(X, y, basis, CorrelationParams(np.exp(best_x)), config.jitter)
    logger.debug(f"n={n} d={d}: loglik={model.loglik:.6g} theta={np.round(model.theta.theta, 4)}")
    return model


def predict_many(model: TrainedGP, X0, with_outside: bool = False):
    """
    BLUP mean μ(x0) + r(x0)ᵀw and universal-kriging standard error

        se² = σ̂²·(1 − rᵀR⁻¹r + uᵀ(FᵀR⁻¹F)⁻¹u),  u = f(x0) − FᵀR⁻¹r

    for every row of X0, in chunks of PREDICT_CHUNK rows. Points outside the
    unit box are extrapolated; ``with_outside=True`` also returns their mask.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=np.float64))
    if X0.shape[1] != model.d:
        raise InvalidArgumentError(f"query has d={X0.shape[1]} but model has d={model.d}")
    if not np.all(np.isfinite(X0)):
        raise InvalidArgumentError("query points must be finite")
    outside = np.any((X0 < 0.0) | (X0 > 1.0), axis=1)
    if np.any(outside):
        logger.info(f"extrapolating at {int(outside.sum())} point(s) outside the unit box")

    means = np.empty(X0.shape[0])
    ses = np.empty(X0.shape[0])
    for start in range(0, X0.shape[0], PREDICT_CHUNK):
        block = X0[start:start + PREDICT_CHUNK]
        r = cross_correlation(block, model.design, model.theta)
        F0 = model.basis.evaluate(block)
        means[start:start + block.shape[0]] = F0 @ model.beta + r @ model.weights
        if model.degenerate:
            ses[start:start + block.shape[0]] = 0.0
            continue
        v = linalg.solve_triangular(model.chol, r.T, lower=True, check_finite=False)
        u = F0 - r @ model.r_inv_f
        q = linalg.cho_solve((model.gram_chol, True), u.T, check_finite=False)
        var = model.sigma2 * (1.0 - np.sum(v * v, axis=0) + np.sum(u.T * q, axis=0))
        ses[start:start + block.shape[0]] = np.sqrt(np.maximum(var, 0.0))
    return (means, ses, outside) if with_outside else (means, ses)


def predict(model: TrainedGP, x0, with_outside: bool = False):
    """Mean and standard error at a single d-vector (plus the extrapolation flag)."""
    x = np.asarray(x0, dtype=np.float64)
    if x.ndim != 1 or x.size != model.d:
        raise InvalidArgumentError(f"x0 must be a {model.d}-vector, got shape {x.shape}")
    mean, se, outside = predict_many(model, x[np.newaxis, :], with_outside=True)
    if with_outside:
        return float(mean[0]), float(se[0]), bool(outside[0])
    return float(mean[0]), float(se[0])


__all__ = [
    'TrendKind', 'TrendBasis', 'FitConfig', 'TrainedGP', 'profile_estimates',
    'concentrated_loglik', 'build_model', 'fit', 'predict', 'predict_many',
]
