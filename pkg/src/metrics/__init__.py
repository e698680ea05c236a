"""
Accuracy and timing metrics for the benchmark protocol.

Scaled RMSPE divides by the test-set standard deviation (population form,
divide by n), so predicting the test-set mean everywhere scores exactly 1.
Scaled MAPE divides by the largest absolute deviation from the test-set mean.
"""

import time
from dataclasses import dataclass, asdict

import numpy as np

from src.errors import InvalidArgumentError, DegenerateTestSetError


@dataclass(frozen=True)
class TestSet:
    """Uniform random test points with their true responses."""

    __test__ = False   # not a pytest class

    points: np.ndarray
    truth: np.ndarray
    seed: int = 0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        truth = np.asarray(self.truth, dtype=np.float64).ravel()
        if pts.shape[0] != truth.size:
            raise InvalidArgumentError("test set needs one truth value per point")
        if truth.size < 2:
            raise InvalidArgumentError("test set needs at least 2 points")
        object.__setattr__(self, 'points', pts)
        object.__setattr__(self, 'truth', truth)

    @property
    def n(self) -> int:
        return self.truth.size

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class BenchRecord:
    """One (method, function, design size) cell of a benchmark table."""

    method: str
    function: str
    n: int
    rmspe_scaled: float
    mape_scaled: float
    time_minutes: float
    seed: int

    def __post_init__(self):
        for name in ('rmspe_scaled', 'mape_scaled', 'time_minutes'):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0.0:
                raise InvalidArgumentError(f"{name} must be finite and >= 0, got {value}")

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(truth, dtype=np.float64).ravel()
    p = np.asarray(pred, dtype=np.float64).ravel()
    if t.size != p.size:
        raise InvalidArgumentError(f"length mismatch: {t.size} truth vs {p.size} predictions")
    if t.size == 0:
        raise InvalidArgumentError("metrics need at least one value")
    return t, p


def rmspe(truth, pred) -> float:
    """Root mean squared prediction error."""
    t, p = _pair(truth, pred)
    return float(np.sqrt(np.mean((t - p) ** 2)))


def mape(truth, pred) -> float:
    """Maximum absolute prediction error."""
    t, p = _pair(truth, pred)
    return float(np.max(np.abs(t - p)))


def scale_metrics(truth, rmspe_val: float, mape_val: float) -> tuple[float, float]:
    """(RMSPE / sd(truth), MAPE / max|truth − mean(truth)|)."""
    t = np.asarray(truth, dtype=np.float64).ravel()
    sd = float(np.std(t))
    max_dev = float(np.max(np.abs(t - np.mean(t)))) if t.size else 0.0
    if sd == 0.0 or max_dev == 0.0:
        raise DegenerateTestSetError("test-set responses are constant; scaled metrics are undefined")
    return rmspe_val / sd, mape_val / max_dev


def make_test_set(target, n_test: int, rng: np.random.Generator, seed: int = 0) -> TestSet:
    """n_test points drawn uniformly on [0,1]^d, with the target's true values."""
    if n_test < 2:
        raise InvalidArgumentError("n_test must be >= 2")
    points = rng.uniform(size=(n_test, target.d))
    return TestSet(points, target(points), seed)


def evaluate(method: str, function: str, n: int, truth, pred,
             minutes: float, seed: int) -> BenchRecord:
    """Score predictions against the truth and package the cell."""
    r_scaled, m_scaled = scale_metrics(truth, rmspe(truth, pred), mape(truth, pred))
    return BenchRecord(method, function, int(n), r_scaled, m_scaled, float(minutes), int(seed))


class Stopwatch:
    """
    Wall-clock timer in minutes; usable as a context manager and pausable so
    target evaluations can be excluded from the measured time.
    """

    def __init__(self):
        self._elapsed = 0.0
        self._started: float | None = None

    def start(self) -> "Stopwatch":
        if self._started is None:
            self._started = time.perf_counter()
        return self

    def stop(self) -> "Stopwatch":
        if self._started is not None:
            self._elapsed += time.perf_counter() - self._started
            self._started = None
        return self

    @property
    def running(self) -> bool:
        return self._started is not None

    @property
    def seconds(self) -> float:
        running = time.perf_counter() - self._started if self._started is not None else 0.0
        return self._elapsed + running

    @property
    def minutes(self) -> float:
        return self.seconds / 60.0

    def __enter__(self) -> "Stopwatch":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


__all__ = [
    'TestSet', 'BenchRecord', 'rmspe', 'mape', 'scale_metrics', 'make_test_set',
    'evaluate', 'Stopwatch',
]
