"""Gaussian-process core: Matérn 5/2 kernel, ML fitting and kriging prediction."""

from .kernel import (
    CorrelationParams, CorrelationFactor, matern52, correlation,
    cross_correlation, factorize, corr_matrix,
)
from .gp import (
    TrendKind, TrendBasis, FitConfig, TrainedGP, profile_estimates,
    concentrated_loglik, build_model, fit, predict, predict_many,
)

__all__ = [
    'CorrelationParams', 'CorrelationFactor', 'matern52', 'correlation',
    'cross_correlation', 'factorize', 'corr_matrix',
    'TrendKind', 'TrendBasis', 'FitConfig', 'TrainedGP', 'profile_estimates',
    'concentrated_loglik', 'build_model', 'fit', 'predict', 'predict_many',
]
