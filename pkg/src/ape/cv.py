"""
Leave-one-out cross-validation error for a region's GP.

Closed form: with Q = R⁻¹ − R⁻¹F(FᵀR⁻¹F)⁻¹FᵀR⁻¹, the held-out residual is

    e_i = y_i − ŷ_(−i)(x_i) = (Q·y)_i / Q_ii,   and Q·y = R⁻¹(y − Fβ̂).

This equals refitting at the same θ with β̂ re-estimated on each fold (the
trend projection in Q accounts for that re-estimation; without it the
identity holds only for a known β).
"""

import logging

import numpy as np
from scipy import linalg

from config import DEFAULT_JITTER, MIN_LOO_POINTS
from src.ape import ApeConfig, ErrorMeasure, LooMode
from src.core import CorrelationParams, TrainedGP, TrendBasis, build_model, fit, predict
from src.errors import InsufficientDataError, IllConditionedError

logger = logging.getLogger("CV")


def loo_residuals_closed_form(model: TrainedGP) -> np.ndarray:
    """Leave-one-out residuals y_i − ŷ_(−i) from a single fitted model."""
    if model.n < MIN_LOO_POINTS:
        raise InsufficientDataError(f"leave-one-out needs >= {MIN_LOO_POINTS} points, got {model.n}")
    if model.degenerate:
        return np.zeros(model.n)
    R_inv = model.factor().inverse()
    G = linalg.cho_solve((model.gram_chol, True), model.r_inv_f.T, check_finite=False)
    q_diag = np.diag(R_inv) - np.sum(model.r_inv_f * G.T, axis=1)
    if np.any(q_diag <= 0.0):
        raise IllConditionedError("non-positive leave-one-out precision", model.jitter)
    return model.weights / q_diag


def loo_residuals_refit(design, y, basis: TrendBasis, params: CorrelationParams,
                        jitter: float = DEFAULT_JITTER) -> np.ndarray:
    """Reference path: drop each point, re-condition at fixed θ, predict it."""
    X = np.atleast_2d(np.asarray(design, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if n < MIN_LOO_POINTS:
        raise InsufficientDataError(f"leave-one-out needs >= {MIN_LOO_POINTS} points, got {n}")
    resid = np.empty(n)
    for i in range(n):
        keep = np.arange(n) != i
        fold = build_model(X[keep], y[keep], basis, params, jitter)
        resid[i] = y[i] - predict(fold, X[i])[0]
    return resid


def _loo_residuals_full_refit(X: np.ndarray, y: np.ndarray, basis: TrendBasis,
                              config: ApeConfig) -> np.ndarray:
    n = y.size
    resid = np.empty(n)
    for i in range(n):
        keep = np.arange(n) != i
        fold = fit(X[keep], y[keep], basis, config.fit)
        resid[i] = y[i] - predict(fold, X[i])[0]
    return resid


def summarize(residuals: np.ndarray, measure: ErrorMeasure) -> float:
    if measure is ErrorMeasure.MAX_ABS:
        return float(np.max(np.abs(residuals)))
    return float(np.mean(residuals ** 2))


def cross_validate(design, y, config: ApeConfig) -> tuple[TrainedGP, float]:
    """Fit the region GP and score it; returns (model on all points, e_k)."""
    X = np.atleast_2d(np.asarray(design, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size < MIN_LOO_POINTS:
        raise InsufficientDataError(f"leave-one-out needs >= {MIN_LOO_POINTS} points, got {y.size}")
    basis = config.basis(X.shape[1])
    model = fit(X, y, basis, config.fit)
    if config.loo_mode is LooMode.FULL_REFIT:
        resid = _loo_residuals_full_refit(X, y, basis, config)
    else:
        resid = loo_residuals_closed_form(model)
    return model, summarize(resid, config.error_measure)


def loo_cv_error(design, y, config: ApeConfig) -> float:
    """Leave-one-out error (MSE or max-abs per config) of a GP on these data."""
    return cross_validate(design, y, config)[1]


__all__ = [
    'loo_residuals_closed_form', 'loo_residuals_refit', 'summarize',
    'cross_validate', 'loo_cv_error',
]
