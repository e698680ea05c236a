"""
Benchmark response surfaces on [0,1]^d.

All functions accept a single point or an n×d array and are vectorized over
rows. Domain checks live in TargetFunction; these are the bare formulas.
"""

import numpy as np

from config import CORNER_PEAK_A_10D
from src.errors import InvalidArgumentError


def corner_peak(x, a=CORNER_PEAK_A_10D):
    """
    Corner peak: (1 + Σ a_j x_j)^−(d+1).

    Rises sharply towards the origin; larger a_j make dimension j matter more.
    """
    a = np.asarray(a, dtype=np.float64)
    X = np.asarray(x, dtype=np.float64)
    if X.shape[-1] != a.size:
        raise InvalidArgumentError(f"corner peak has d={a.size}, got points with d={X.shape[-1]}")
    if np.any(a <= 0.0):
        raise InvalidArgumentError("corner-peak parameters a_j must be positive")
    return (1.0 + X @ a) ** (-(a.size + 1))


def franke2d(x1, x2):
    """Bivariate Franke surface: two Gaussian peaks and a smaller dip."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    return (
        0.75 * np.exp(-(9 * x1 - 2) ** 2 / 4 - (9 * x2 - 2) ** 2 / 4)
        + 0.75 * np.exp(-(9 * x1 + 1) ** 2 / 49 - (9 * x2 + 1) ** 2 / 10)
        + 0.5 * np.exp(-(9 * x1 - 7) ** 2 / 4 - (9 * x2 - 3) ** 2 / 4)
        - 0.2 * np.exp(-(9 * x1 - 4) ** 2 - (9 * x2 - 7) ** 2)
    )


def franke4d(x):
    """Sum of two marginal Franke surfaces: g(x1, x2) + g(x3, x4)."""
    X = np.asarray(x, dtype=np.float64)
    if X.shape[-1] != 4:
        raise InvalidArgumentError(f"franke4d needs 4 inputs, got {X.shape[-1]}")
    return franke2d(X[..., 0], X[..., 1]) + franke2d(X[..., 2], X[..., 3])


__all__ = ['corner_peak', 'franke2d', 'franke4d']
