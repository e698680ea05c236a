"""
Target functions addressable by name.

Two kinds of target:
    TargetFunction   a formula evaluated anywhere in [0,1]^d
    TabulatedTarget  a fixed table of (point, value) pairs, loaded from CSV;
                     it can only be "evaluated" at its own points, which is
                     enough for emulation-only workflows.
"""

import logging
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from config import CORNER_PEAK_A_10D, ROUND_DECIMALS
from src.errors import InvalidArgumentError, EvaluationError, RecordParseError
from src.testfns.functions import corner_peak, franke2d, franke4d

logger = logging.getLogger("Targets")


class TargetFunction:
    """
    Deterministic response surface on [0,1]^d.

    Calling with a d-vector returns a float; with an n×d array, an n-vector.
    """

    def __init__(self, name: str, d: int, func: Callable[[np.ndarray], np.ndarray],
                 params: dict | None = None):
        if d < 1:
            raise InvalidArgumentError("target dimension must be >= 1")
        self.name = name
        self.d = int(d)
        self.func = func
        self.params = dict(params or {})

    def _check(self, x) -> tuple[np.ndarray, bool]:
        X = np.asarray(x, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise InvalidArgumentError(f"{self.name} expects points of dimension {self.d}, got shape {X.shape}")
        if not np.all(np.isfinite(X)) or np.any(X < 0.0) or np.any(X > 1.0):
            raise InvalidArgumentError(f"{self.name} is defined on [0,1]^{self.d} only")
        return X, single

    def __call__(self, x):
        X, single = self._check(x)
        try:
            values = np.asarray(self.func(X), dtype=np.float64).reshape(X.shape[0])
        except EvaluationError:
            raise
        except Exception as e:
            raise EvaluationError(f"{self.name} failed: {e}") from e
        if not np.all(np.isfinite(values)):
            raise EvaluationError(f"{self.name} returned non-finite values")
        return float(values[0]) if single else values

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, d={self.d})"


class TabulatedTarget(TargetFunction):
    """Target backed by a table; lookup is exact after canonical rounding."""

    def __init__(self, name: str, points, values):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        vals = np.asarray(values, dtype=np.float64).ravel()
        if pts.shape[0] != vals.size or pts.shape[0] == 0:
            raise InvalidArgumentError("table needs one value per point and at least one row")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(vals))):
            raise InvalidArgumentError("table contains non-finite entries")
        self.points = pts
        self.values = vals
        self._index = {tuple(np.round(p, ROUND_DECIMALS)): i for i, p in enumerate(pts)}
        super().__init__(name, pts.shape[1], self._lookup, {'rows': vals.size})

    def _lookup(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        for i, p in enumerate(X):
            row = self._index.get(tuple(np.round(p, ROUND_DECIMALS)))
            if row is None:
                raise EvaluationError(f"{self.name}: no tabulated value at {p.tolist()}")
            out[i] = self.values[row]
        return out

    @classmethod
    def from_csv(cls, path, name: str | None = None) -> "TabulatedTarget":
        """CSV with header x1..xd,y."""
        path = Path(path)
        try:
            frame = pd.read_csv(path, float_precision='round_trip')
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise RecordParseError(f"cannot parse table {path}: {e}") from e
        cols = list(frame.columns)
        if len(cols) < 2 or cols[-1] != 'y' or cols[:-1] != [f'x{j + 1}' for j in range(len(cols) - 1)]:
            raise RecordParseError("table header must be x1,...,xd,y", line=1)
        data = frame.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
        bad = np.flatnonzero(~np.all(np.isfinite(data), axis=1))
        if bad.size:
            raise RecordParseError(f"non-numeric entry in {path}", line=int(bad[0]) + 2)
        return cls(name or path.stem, data[:, :-1], data[:, -1])


def make_corner_peak(a, name: str | None = None) -> TargetFunction:
    """Corner peak with a user-supplied a-vector (any dimension)."""
    a = tuple(float(v) for v in np.asarray(a, dtype=np.float64).ravel())
    if not a or min(a) <= 0.0:
        raise InvalidArgumentError("corner-peak parameters a_j must be positive")
    return TargetFunction(
        name or f"corner-peak-{len(a)}d", len(a),
        lambda X: corner_peak(X, a), {'a': list(a)},
    )


_REGISTRY: dict[str, TargetFunction] = {}


def register(target: TargetFunction, replace: bool = False) -> TargetFunction:
    if target.name in _REGISTRY and not replace:
        raise InvalidArgumentError(f"target {target.name!r} is already registered")
    _REGISTRY[target.name] = target
    return target


def get_target(name: str) -> TargetFunction:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown function {name!r}; available: {', '.join(available())}"
        ) from None


def available() -> list[str]:
    return sorted(_REGISTRY)


register(make_corner_peak(CORNER_PEAK_A_10D, name="corner-peak-10d"))
register(TargetFunction("franke-2d", 2, lambda X: franke2d(X[:, 0], X[:, 1])))
register(TargetFunction("franke-4d", 4, franke4d))


__all__ = [
    'TargetFunction', 'TabulatedTarget', 'make_corner_peak', 'register',
    'get_target', 'available', 'corner_peak', 'franke2d', 'franke4d',
]
