"""
The sequential APE loop.

    1. Evaluate f on an n0-point LHD; one region, fit it, score it.
    2. While n < N:
         k*  = region with the largest CV error (lowest id on ties)
         top region k* up to 2·n0 points with an LHD inside its box
         j*  = choose_split_dimension(k*)
         split k* at the midpoint of j*, fit and score both children
    3. Predict with the model of whichever region contains x0.

Only the two children are refitted in an iteration; every other region keeps
its model and its cached error untouched.
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from config import MIN_LOO_POINTS, MIN_SPLIT_SIDE_POINTS, TRACE_FLUSH_EVERY
from src.ape import ApeConfig, Partition, Region
from src.ape.cv import cross_validate
from src.ape.split import choose_split_dimension, split_region
from src.core import predict, predict_many
from src.design import Design, DesignKind, Provenance
from src.design.lhd import lhd_in_box, lhd_points
from src.errors import EvaluationError, InvalidArgumentError, NoValidSplitError
from src.metrics import Stopwatch
from src.rng import derive_rng

logger = logging.getLogger("APE")


class BudgetTracker:
    """
    Counts target evaluations and emulator time, and reports checkpoints.

    The stopwatch is paused while the target is being evaluated, so
    ``minutes`` measures design, fitting and prediction work only.
    """

    def __init__(self, checkpoints=(), max_evaluations: int | None = None):
        points = sorted({int(c) for c in checkpoints})
        if points and points[0] < 1:
            raise InvalidArgumentError("checkpoints must be positive design sizes")
        if max_evaluations is not None and max_evaluations < 1:
            raise InvalidArgumentError("max_evaluations must be >= 1")
        self.checkpoints: list[int] = points
        self.max_evaluations = max_evaluations
        self.evaluations = 0
        self.stopwatch = Stopwatch()
        self._reached: set[int] = set()

    @property
    def minutes(self) -> float:
        return self.stopwatch.minutes

    @property
    def pending(self) -> list[int]:
        return [c for c in self.checkpoints if c not in self._reached]

    def crossed(self, n: int) -> list[int]:
        """Checkpoints newly reached now that the design has n points."""
        hit = [c for c in self.pending if c <= n]
        self._reached.update(hit)
        return hit

    def evaluate(self, f, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.max_evaluations is not None and self.evaluations + X.shape[0] > self.max_evaluations:
            raise EvaluationError(
                f"evaluation budget exhausted ({self.evaluations} used, "
                f"{X.shape[0]} more requested, limit {self.max_evaluations})"
            )
        running = self.stopwatch.running
        self.stopwatch.stop()
        try:
            values = np.atleast_1d(np.asarray(f(X), dtype=np.float64)).ravel()
        except EvaluationError:
            raise
        except Exception as e:
            raise EvaluationError(f"target raised {type(e).__name__}: {e}") from e
        finally:
            if running:
                self.stopwatch.start()
        if values.size != X.shape[0]:
            raise EvaluationError(f"target returned {values.size} values for {X.shape[0]} points")
        if not np.all(np.isfinite(values)):
            raise EvaluationError("target returned non-finite values")
        self.evaluations += X.shape[0]
        return values


@dataclass(frozen=True)
class IterationTrace:
    iter: int
    n: int
    K: int
    region_id: int
    dim: int
    split_value: float
    child_errors: tuple[float, float]
    region_errors: tuple[float, ...]
    elapsed_s: float

    def to_dict(self) -> dict:
        return {
            'iter': self.iter, 'n': self.n, 'K': self.K,
            'region_id': self.region_id, 'dim': self.dim,
            'split_value': self.split_value,
            'child_errors': list(self.child_errors),
            'region_errors': list(self.region_errors),
            'elapsed_s': self.elapsed_s,
        }


@dataclass
class ApeResult:
    partition: Partition
    design: Design
    y: np.ndarray
    trace: list[IterationTrace] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def n(self) -> int:
        return self.design.n

    def predict(self, x0) -> tuple[float, float, int]:
        return predict_partitioned(self.partition, x0)

    def predict_many(self, X0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Means, standard errors and owning region ids for the rows of X0."""
        X0 = np.atleast_2d(np.asarray(X0, dtype=np.float64))
        if X0.shape[1] != self.partition.d:
            raise InvalidArgumentError(f"points have d={X0.shape[1]}, partition has d={self.partition.d}")
        if not np.all(np.isfinite(X0)) or np.any(X0 < 0.0) or np.any(X0 > 1.0):
            raise InvalidArgumentError(f"prediction points must lie in [0,1]^{self.partition.d}")
        means = np.empty(X0.shape[0])
        ses = np.empty(X0.shape[0])
        owner = np.full(X0.shape[0], -1, dtype=np.int64)
        for k, region in enumerate(self.partition.regions):
            rows = np.flatnonzero((owner < 0) & region.box.contains(X0))
            if rows.size == 0:
                continue
            model = _require_model(region, k)
            means[rows], ses[rows] = predict_many(model, region.box.to_local(X0[rows]))
            owner[rows] = k
        if np.any(owner < 0):
            raise InvalidArgumentError("partition does not cover every prediction point")
        return means, ses, owner


def _require_model(region: Region, k: int):
    if region.model is None:
        raise InvalidArgumentError(f"region {k} has no fitted model")
    return region.model


def predict_partitioned(partition: Partition, x0) -> tuple[float, float, int]:
    """(mean, se, region id) from the model of the region containing x0."""
    k = partition.locate(x0)
    region = partition.regions[k]
    mean, se = predict(_require_model(region, k), region.box.to_local(np.asarray(x0, dtype=np.float64).ravel()))
    return mean, se, k


def _fit_region(region: Region, X: np.ndarray, y: np.ndarray, config: ApeConfig) -> Region:
    idx = region.point_indices
    region.model, region.cv_error = cross_validate(region.box.to_local(X[idx]), y[idx], config)
    return region


def _min_child_points(config: ApeConfig, d: int) -> int:
    return max(MIN_SPLIT_SIDE_POINTS, MIN_LOO_POINTS, config.basis(d).p + 2)


def _pick_region(partition: Partition, skip: set[int]) -> int | None:
    """argmax_k e_k over splittable regions, lowest id on ties."""
    best = None
    for k, region in enumerate(partition.regions):
        if k in skip:
            continue
        if best is None or region.cv_error > partition.regions[best].cv_error:
            best = k
    return best


def _trace_line(record: IterationTrace) -> str:
    return json.dumps(record.to_dict()) + "\n"


def run_ape(f, config: ApeConfig, tracker: BudgetTracker | None = None,
            trace_path=None,
            on_checkpoint: Callable[[ApeResult, list[int]], None] | None = None) -> ApeResult:
    """
    Run the adaptive partitioning loop on target ``f`` (a callable with a
    ``d`` attribute, evaluated on n×d arrays).

    ``on_checkpoint(result, reached)`` is called, with the tracker's stopwatch
    paused, each time the design size reaches one or more of the tracker's
    checkpoints (including the initial design). The result it receives is
    live: use it before returning.

    Any exception raised by the target, or a wrong number of returned
    values, raises EvaluationError whose ``partial`` is the result as of the
    last completed iteration (an empty design if the initial n0 points could
    not be evaluated).
    """
    d = int(f.d)
    config.validate_for(d)
    tracker = tracker if tracker is not None else BudgetTracker()
    min_side = _min_child_points(config, d)

    logger.info(f"Starting: d={d} n0={config.n0} N={config.N} "
                f"error={config.error_measure.value} loo={config.loo_mode.value} seed={config.seed}")

    # Empty until the initial design is evaluated
    X = np.empty((0, d))
    y = np.empty(0)
    partition = Partition.whole_domain(d, np.arange(0))

    trace: list[IterationTrace] = []
    iteration = 0
    unsplittable: set[int] = set()
    stop_reason = "reached N"
    trace_file = None
    pool = None

    def snapshot() -> ApeResult:
        design = Design(X, Provenance(DesignKind.APE, iteration=iteration), config.seed)
        return ApeResult(partition, design, y, list(trace), stop_reason)

    def report_checkpoints() -> None:
        reached = tracker.crossed(X.shape[0])
        if reached and on_checkpoint is not None:
            tracker.stopwatch.stop()
            try:
                on_checkpoint(snapshot(), reached)
            finally:
                tracker.stopwatch.start()

    t_start = time.perf_counter()
    tracker.stopwatch.start()
    try:
        if config.parallel_children:
            pool = ThreadPoolExecutor(max_workers=2)
        if trace_path is not None:
            trace_path = Path(trace_path)
            trace_path.parent.mkdir(parents=True, exist_ok=True)
            trace_file = open(trace_path, 'w', encoding='utf-8', newline='\n')
            logger.info(f"Trace: {trace_path}")

        X_init = lhd_points(config.n0, d, derive_rng(config.seed, 'ape', 0))
        y = tracker.evaluate(f, X_init)
        X = X_init
        partition.regions[0].point_indices = np.arange(config.n0)
        _fit_region(partition.regions[0], X, y, config)

        report_checkpoints()

        while X.shape[0] < config.N:
            if config.max_iterations is not None and iteration >= config.max_iterations:
                stop_reason = "max iterations"
                break
            if config.tolerance is not None and max(partition.errors()) <= config.tolerance:
                stop_reason = "tolerance"
                break
            k_star = _pick_region(partition, unsplittable)
            if k_star is None:
                stop_reason = "no splittable region"
                logger.warning(f"No splittable region left at n={X.shape[0]}, K={partition.K}")
                break
            region = partition.regions[k_star]

            # Top up to 2·n0 points inside the chosen region
            n_new = max(0, 2 * config.n0 - region.n_points)
            if n_new > 0:
                rng = derive_rng(config.seed, 'ape', iteration + 1, k_star)
                X_new = lhd_in_box(n_new, region.box, rng).points
                y_new = tracker.evaluate(f, X_new)
                first = X.shape[0]
                X = np.vstack([X, X_new])
                y = np.concatenate([y, y_new])
                region.point_indices = np.concatenate([region.point_indices, np.arange(first, first + n_new)])

            try:
                j_star = choose_split_dimension(region, X, y, min_side=min_side)
            except NoValidSplitError as e:
                logger.info(f"Region {k_star} is unsplittable: {e}")
                unsplittable.add(k_star)
                if n_new > 0:
                    _fit_region(region, X, y, config)
                continue

            iteration += 1
            split_value = region.box.midpoint(j_star)
            split_region(partition, k_star, j_star, X, iteration)
            children = [partition.regions[k_star], partition.regions[-1]]
            if pool is not None:
                list(pool.map(lambda r: _fit_region(r, X, y, config), children))
            else:
                for child in children:
                    _fit_region(child, X, y, config)

            record = IterationTrace(
                iter=iteration, n=X.shape[0], K=partition.K,
                region_id=k_star, dim=j_star, split_value=split_value,
                child_errors=(children[0].cv_error, children[1].cv_error),
                region_errors=tuple(partition.errors()),
                elapsed_s=time.perf_counter() - t_start,
            )
            trace.append(record)
            if trace_file is not None:
                trace_file.write(_trace_line(record))
                if iteration % TRACE_FLUSH_EVERY == 0:
                    trace_file.flush()

            logger.info(f"Iter {iteration:4d} | n={X.shape[0]:6d} K={partition.K:4d} | "
                        f"split region {k_star} dim {j_star} at {split_value:.6g} | "
                        f"max e={max(partition.errors()):.4g} | {record.elapsed_s:.1f} s")
            report_checkpoints()

    except EvaluationError as e:
        stop_reason = "evaluation failure"
        logger.error(f"Target evaluation failed at n={X.shape[0]}: {e}")
        raise EvaluationError(str(e), partial=snapshot()) from (e.__cause__ or e)

    finally:
        tracker.stopwatch.stop()
        if pool is not None:
            pool.shutdown()
        if trace_file is not None:
            trace_file.close()

    logger.info(f"Done ({stop_reason}): n={X.shape[0]} K={partition.K} iterations={iteration} "
                f"evaluations={tracker.evaluations} emulator time {tracker.minutes:.2f} min")
    return snapshot()


def partition_to_json(partition: Partition) -> list[dict]:
    """One entry per region: box, fitted parameters, CV error and point indices."""
    out = []
    for k, region in enumerate(partition.regions):
        model = region.model
        out.append({
            'region_id': k,
            **region.box.to_dict(),
            'theta': model.theta.theta.tolist() if model is not None else None,
            'beta': model.beta.tolist() if model is not None else None,
            'sigma2': model.sigma2 if model is not None else None,
            'jitter': model.jitter if model is not None else None,
            'cv_error': region.cv_error,
            'point_indices': region.point_indices.tolist(),
        })
    return out


def write_partition(partition: Partition, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        json.dump(partition_to_json(partition), fh, indent=2)
        fh.write("\n")
    logger.info(f"Partition ({partition.K} regions): {path}")
    return path


def write_trace(trace, path) -> Path:
    """Rewrite a whole trace as JSON lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        for record in trace:
            fh.write(_trace_line(record))
    return path


__all__ = [
    'BudgetTracker', 'IterationTrace', 'ApeResult', 'run_ape', 'predict_partitioned',
    'partition_to_json', 'write_partition', 'write_trace',
]
