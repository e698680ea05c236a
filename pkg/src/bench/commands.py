"""
CLI command implementations.

Each ``cmd_*`` takes the parsed argparse namespace and returns the path(s) it
wrote. The work itself lives in plain functions (``make_design``,
``fit_predict``, ``ape_run``, ``merge_reports``) so the sweep can call them
from worker processes with picklable arguments only.
"""

import logging
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pandas as pd

from config import CSV_FLOAT_FORMAT, RECORD_COLUMNS, default_output_dir
from src.ape import ApeConfig
from src.ape.loop import ApeResult, BudgetTracker, run_ape, write_partition
from src.bench import Method, RunConfig
from src.core import FitConfig, TrendBasis, fit, predict_many
from src.design import Design, DesignKind
from src.design.io import read_design, write_design
from src.design.lhd import lhd
from src.design.sparse_grid import sparse_grid
from src.errors import EmulatorError, EvaluationError
from src.metrics import Stopwatch, TestSet, evaluate, make_test_set
from src.metrics.records import append_records, read_records, read_test_set, write_test_set
from src.rng import derive_rng, derive_seed
from src.testfns import TabulatedTarget, get_target

logger = logging.getLogger("Bench")

LOG_COLUMNS = ('n', 'rmspe_scaled', 'mape_scaled', 'time_minutes')


# ─────────────────────────────────────────────
# Shared plumbing
# ─────────────────────────────────────────────

@contextmanager
def error_context(method: str, function: str, n: int):
    """
    Prefix any package error raised inside with the benchmark cell it came
    from. An evaluation failure carrying a partial result reports the design
    size it reached instead of ``n``.
    """
    try:
        yield
    except EmulatorError as e:
        if isinstance(e, EvaluationError) and e.partial is not None:
            n = e.partial.n
        e.args = (f"{method} on {function}, n={n}: {e.args[0] if e.args else e}", *e.args[1:])
        raise


def output_dir(args) -> Path:
    out = Path(args.out) if getattr(args, 'out', None) else default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def design_filename(kind: DesignKind, d: int, seed: int, n: int | None = None, eta: int | None = None) -> str:
    if kind is DesignKind.SPARSE_GRID:
        return f"design_sgd_d{d}_eta{eta}.csv"
    return f"design_{kind.value}_d{d}_n{n}_s{seed}.csv"


def testset_filename(function: str, n_test: int, seed: int) -> str:
    return f"testset_{function}_n{n_test}_s{seed}.csv"


def load_target(function: str | None, data=None):
    """Registered analytic target, or a tabulated one read from ``data``."""
    if data is not None:
        return TabulatedTarget.from_csv(data, name=function)
    return get_target(function)


def resolve_test_set(target, n_test: int, seed: int, test_set_path=None, out: Path | None = None) -> TestSet:
    """
    The test set for a run: read from ``test_set_path`` when given; the table
    itself for a tabulated target; otherwise drawn from the 'testset' stream
    and written to ``out`` so other methods can consume the same file.
    """
    if test_set_path is not None:
        return read_test_set(test_set_path, seed)
    if isinstance(target, TabulatedTarget):
        return TestSet(target.points, target.values, seed)
    test_set = make_test_set(target, n_test, derive_rng(seed, 'testset', 0), seed)
    if out is not None:
        write_test_set(test_set, out / testset_filename(target.name, n_test, seed))
    return test_set


# ─────────────────────────────────────────────
# design
# ─────────────────────────────────────────────

def make_design(generator: str, d: int, seed: int, n: int | None = None, eta: int | None = None) -> Design:
    """LHD of size n (from the 'design' stream, counter n) or sparse grid of level eta."""
    if generator == 'lhd':
        return lhd(n, d, derive_rng(seed, 'design', n), seed=seed)
    return sparse_grid(d, eta)


def cmd_design(args) -> Path:
    out = output_dir(args)
    design = make_design(args.generator, args.d, args.seed, n=args.n, eta=args.eta)
    name = design_filename(design.provenance.kind, design.d, args.seed, n=design.n, eta=args.eta)
    path = write_design(design, out / name)
    logger.info(f"{args.generator}: n={design.n} d={design.d} -> {path}")
    return path


# ─────────────────────────────────────────────
# fit (StandardGP / SGDFit)
# ─────────────────────────────────────────────

def fit_predict(run: RunConfig, design: Design, target, test_set: TestSet,
                trend: str = 'constant', records_path=None) -> tuple[Path, Path]:
    """
    Fit one global GP on ``design`` and score it on ``test_set``.

    Writes ``predictions_<method>_<function>_n<n>_s<seed>.csv`` (truth, mean,
    se per test point) and appends a BenchRecord. Timing covers fitting and
    prediction only.
    """
    method, n = run.method.value, design.n
    out = run.output_dir
    out.mkdir(parents=True, exist_ok=True)
    with error_context(method, target.name, n):
        y = target(design.points)
        with Stopwatch() as sw:
            model = fit(design.points, y, TrendBasis(trend, design.d),
                        FitConfig(seed=derive_seed(run.seed, 'fit', n)))
            mean, se = predict_many(model, test_set.points)
        record = evaluate(method, target.name, n, test_set.truth, mean, sw.minutes, run.seed)

    pred_path = out / f"predictions_{method}_{target.name}_n{n}_s{run.seed}.csv"
    pd.DataFrame({'truth': test_set.truth, 'mean': mean, 'se': se}).to_csv(
        pred_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n',
    )
    records_path = Path(records_path) if records_path is not None else out / "records.csv"
    append_records([record], records_path)
    logger.info(f"{method} {target.name} n={n}: scaled RMSPE={record.rmspe_scaled:.4f} "
                f"scaled MAPE={record.mape_scaled:.4f} time={record.time_minutes:.3f} min")
    return pred_path, records_path


def cmd_fit_predict(args) -> tuple[Path, Path]:
    design = read_design(args.design)
    target = load_target(args.function, args.data)
    run = RunConfig(
        function=target.name, method=Method(args.method), design_kind=design.provenance.kind,
        n_test=args.n_test, seed=args.seed, output_dir=output_dir(args),
    )
    test_set = resolve_test_set(target, run.n_test, run.seed, args.test_set, run.output_dir)
    return fit_predict(run, design, target, test_set, trend=args.trend, records_path=args.records)


# ─────────────────────────────────────────────
# ape
# ─────────────────────────────────────────────

def ape_run(run: RunConfig, target, test_set: TestSet, records_path=None) -> dict:
    """
    Run APE with a BenchRecord appended at every checkpoint in ``run.sizes``
    (the final design size N when empty). Writes the trace, the partition and
    the final design; returns their paths.
    """
    out = run.output_dir
    out.mkdir(parents=True, exist_ok=True)
    stem = f"ape_{target.name}_n0{run.ape.n0}_s{run.seed}"
    records_path = Path(records_path) if records_path is not None else out / "records.csv"
    tracker = BudgetTracker(run.sizes or (run.ape.N,))

    def on_checkpoint(result: ApeResult, reached: list[int]) -> None:
        with Stopwatch() as sw:
            mean = result.predict_many(test_set.points)[0]
        record = evaluate(Method.APE.value, target.name, result.n, test_set.truth, mean,
                          tracker.minutes + sw.minutes, run.seed)
        append_records([record], records_path)
        logger.info(f"checkpoint {reached} at n={result.n} K={result.partition.K}: "
                    f"scaled RMSPE={record.rmspe_scaled:.4f}")

    with error_context(Method.APE.value, target.name, run.ape.n0):
        result = run_ape(target, run.ape, tracker, trace_path=out / f"trace_{stem}.jsonl",
                         on_checkpoint=on_checkpoint)
    paths = {
        'trace': out / f"trace_{stem}.jsonl",
        'partition': write_partition(result.partition, out / f"partition_{stem}.json"),
        'design': write_design(result.design, out / f"design_{stem}.csv"),
        'records': records_path,
    }
    if tracker.pending:
        raise EmulatorError(
            f"APE stopped at n={result.n} ({result.stop_reason}) before checkpoints {tracker.pending}"
        )
    return paths


def ape_config_from_args(args) -> ApeConfig:
    return ApeConfig(
        n0=args.n0, N=args.N, error_measure=args.error_measure, seed=args.seed,
        fit=FitConfig(seed=derive_seed(args.seed, 'fit', 0)),
        loo_mode=args.loo_mode, trend=args.trend,
        max_iterations=args.max_iterations, tolerance=args.tolerance,
        parallel_children=args.parallel_children,
    )


def cmd_ape(args) -> dict:
    target = load_target(args.function)
    run = RunConfig(
        function=target.name, method=Method.APE, sizes=sorted(set(args.checkpoints or ())),
        ape=ape_config_from_args(args), n_test=args.n_test, seed=args.seed,
        output_dir=output_dir(args),
    )
    test_set = resolve_test_set(target, run.n_test, run.seed, args.test_set, run.output_dir)
    return ape_run(run, target, test_set, records_path=args.records)


# ─────────────────────────────────────────────
# report
# ─────────────────────────────────────────────

def merge_reports(paths, log_columns: bool = False) -> pd.DataFrame:
    """
    Concatenate record files and sort by (method, function, n). With
    ``log_columns``, add ``log10_<col>`` for n and the three metrics.
    """
    frames = [read_records(p) for p in paths]
    merged = pd.concat(frames, ignore_index=True, sort=False)
    merged = merged.sort_values(['method', 'function', 'n'], kind='mergesort', ignore_index=True)
    if log_columns:
        with np.errstate(divide='ignore'):
            for col in LOG_COLUMNS:
                merged[f'log10_{col}'] = np.log10(merged[col].astype(np.float64))
    extras = [c for c in merged.columns if c not in RECORD_COLUMNS]
    return merged[list(RECORD_COLUMNS) + extras]


def cmd_report(args) -> Path:
    merged = merge_reports(args.inputs, log_columns=args.log_columns)
    path = Path(args.report) if args.report else output_dir(args) / "report.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    merged.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"{len(merged)} records from {len(args.inputs)} file(s) -> {path}")
    return path


__all__ = [
    'error_context', 'make_design', 'cmd_design', 'fit_predict', 'cmd_fit_predict',
    'ape_run', 'ape_config_from_args', 'cmd_ape', 'merge_reports', 'cmd_report',
    'load_target', 'resolve_test_set', 'design_filename', 'testset_filename',
]
