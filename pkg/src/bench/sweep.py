"""
Full benchmark protocol for one function.

    1. one shared test set (stream 'testset')
    2. one LHD file per size (stream 'design', counter n), consumed by StandardGP
    3. one sparse-grid file per eta, consumed by SGDFit
    4. one APE run, checkpointed at the requested sizes
    5. barrier, then merge the per-cell record files

Cells are independent and each writes only its own record file, so they can
run in a process pool. Workers receive file paths and names, never objects.
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import replace
from pathlib import Path

from config import CSV_FLOAT_FORMAT
from src.bench import Method, RunConfig
from src.bench.commands import (
    ape_config_from_args, ape_run, design_filename, fit_predict, load_target,
    make_design, merge_reports, output_dir, resolve_test_set, testset_filename,
)
from src.design import DesignKind
from src.design.io import read_design, write_design
from src.errors import EmulatorError
from src.metrics.records import read_test_set

logger = logging.getLogger("Bench")


def run_cell(cell: dict) -> str:
    """Run one (method, design) cell; returns the record file it wrote."""
    logging.getLogger().setLevel(cell['log_level'])
    target = load_target(cell['function'])
    test_set = read_test_set(cell['test_set'], cell['run'].seed)
    run: RunConfig = cell['run']
    if run.method is Method.APE:
        ape_run(run, target, test_set, records_path=cell['records'])
    else:
        design = read_design(cell['design'])
        fit_predict(run, design, target, test_set, trend=cell['trend'], records_path=cell['records'])
    return cell['records']


def plan_cells(args, out: Path) -> tuple[list[dict], Path]:
    """Write the shared test set and designs; return the cell list and test-set path."""
    target = load_target(args.function)
    methods = [Method(m) for m in (args.methods or [m.value for m in Method])]
    sizes = sorted(set(args.sizes or ()))
    etas = sorted(set(args.etas or ()))
    base = RunConfig(function=target.name, method=Method.STANDARD_GP, sizes=sizes, etas=etas,
                     n_test=args.n_test, seed=args.seed, output_dir=out)

    resolve_test_set(target, base.n_test, base.seed, out=out)
    test_path = out / testset_filename(target.name, base.n_test, base.seed)
    cell_dir = out / "cells"
    common = {'function': target.name, 'test_set': str(test_path), 'trend': args.trend,
              'log_level': logging.getLogger().level}
    cells = []

    if Method.STANDARD_GP in methods:
        for n in sizes:
            design = make_design('lhd', target.d, base.seed, n=n)
            path = write_design(design, out / design_filename(DesignKind.LHD, target.d, base.seed, n=n))
            cells.append({**common, 'run': base, 'design': str(path),
                          'records': str(cell_dir / f"records_StandardGP_n{n}.csv")})
    if Method.SGD_FIT in methods:
        for eta in etas:
            design = make_design('sgd', target.d, base.seed, eta=eta)
            path = write_design(design, out / design_filename(DesignKind.SPARSE_GRID, target.d, base.seed, eta=eta))
            run = replace(base, method=Method.SGD_FIT, design_kind=DesignKind.SPARSE_GRID)
            cells.append({**common, 'run': run, 'design': str(path),
                          'records': str(cell_dir / f"records_SGDFit_eta{eta}.csv")})
    if Method.APE in methods:
        ape_config = ape_config_from_args(args)
        if sizes and ape_config.N < sizes[-1]:
            ape_config = replace(ape_config, N=sizes[-1])
        run = replace(base, method=Method.APE, ape=ape_config)
        cells.append({**common, 'run': run, 'design': None,
                      'records': str(cell_dir / "records_APE.csv")})
    return cells, test_path


def cmd_sweep(args) -> Path:
    out = output_dir(args)
    cells, _ = plan_cells(args, out)
    for cell in cells:
        stale = Path(cell['records'])
        if stale.exists():
            stale.unlink()
    logger.info(f"{len(cells)} cell(s) for {args.function}, workers={args.workers}")

    done, failed = [], []
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = {pool.submit(run_cell, cell): cell for cell in cells}
            for future in as_completed(futures):
                cell = futures[future]
                try:
                    done.append(future.result())
                except EmulatorError as e:
                    logger.error(f"cell {Path(cell['records']).stem} failed: {e}")
                    failed.append(cell)
    else:
        for cell in cells:
            try:
                done.append(run_cell(cell))
            except EmulatorError as e:
                logger.error(f"cell {Path(cell['records']).stem} failed: {e}")
                failed.append(cell)

    report = out / f"records_{args.function}_s{args.seed}.csv"
    if done:
        merged = merge_reports(sorted(done), log_columns=args.log_columns)
        merged.to_csv(report, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"merged {len(merged)} records -> {report}")
    if failed:
        raise EmulatorError(f"{len(failed)} of {len(cells)} sweep cell(s) failed")
    return report


__all__ = ['plan_cells', 'run_cell', 'cmd_sweep']
