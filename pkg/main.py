"""
Main entry point for the Adaptive Partitioning Emulator benchmark harness.

    python main.py design lhd --n 129 --d 4 --seed 7
    python main.py design sgd --d 4 --eta 6
    python main.py fit --design results/design_lhd_d4_n129_s7.csv --function franke-4d
    python main.py ape --function corner-peak-10d --n0 100 --N 1500 --checkpoints 500 1000 1500
    python main.py report results/records.csv --log-columns
    python main.py sweep --function franke-4d --sizes 129 321 --etas 6 7 --workers 3

Exit status: 0 on success, 1 when a command fails, 2 on bad arguments.
"""

import argparse
import logging
import sys

from config import DEFAULT_N0, DEFAULT_N, DEFAULT_N_TEST, DEFAULT_SEED, OUTPUT_DIR_ENV
from src import __version__
from src.ape import ErrorMeasure, LooMode
from src.bench import Method
from src.bench.commands import cmd_ape, cmd_design, cmd_fit_predict, cmd_report
from src.bench.sweep import cmd_sweep
from src.core import TrendKind
from src.errors import EmulatorError
from src.testfns import available

logger = logging.getLogger("Main")


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=non_negative_int, default=DEFAULT_SEED, help="master seed")
    common.add_argument('--out', default=None, help=f"output directory (default: ${OUTPUT_DIR_ENV} or results/)")
    common.add_argument('-v', '--verbose', action='store_true', help="debug logging")

    evaluation = argparse.ArgumentParser(add_help=False)
    evaluation.add_argument('--n-test', type=positive_int, default=DEFAULT_N_TEST)
    evaluation.add_argument('--test-set', default=None, help="existing test-set CSV (x1..xd,y)")
    evaluation.add_argument('--records', default=None, help="record CSV to append to (default: <out>/records.csv)")

    trend = argparse.ArgumentParser(add_help=False)
    trend.add_argument('--trend', choices=[t.value for t in TrendKind], default=TrendKind.CONSTANT.value)

    ape = argparse.ArgumentParser(add_help=False)
    ape.add_argument('--n0', type=positive_int, default=DEFAULT_N0)
    ape.add_argument('--N', type=positive_int, default=DEFAULT_N)
    ape.add_argument('--loo-mode', choices=[m.value for m in LooMode], default=LooMode.CLOSED_FORM.value)
    ape.add_argument('--error-measure', choices=[m.value for m in ErrorMeasure], default=ErrorMeasure.MSE.value)
    ape.add_argument('--max-iterations', type=non_negative_int, default=None)
    ape.add_argument('--tolerance', type=float, default=None)
    ape.add_argument('--parallel-children', action='store_true', help="fit the two children of a split concurrently")

    parser = argparse.ArgumentParser(prog='main.py', description="Adaptive Partitioning Emulator benchmark harness")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('design', parents=[common], help="write a design CSV + JSON sidecar")
    p.add_argument('generator', choices=['lhd', 'sgd'])
    p.add_argument('--d', type=positive_int, required=True)
    p.add_argument('--n', type=positive_int, default=None, help="LHD size")
    p.add_argument('--eta', type=positive_int, default=None, help="sparse-grid level")
    p.set_defaults(handler=cmd_design)

    p = sub.add_parser('fit', parents=[common, evaluation, trend], help="fit one global GP and score it")
    p.add_argument('--method', choices=[Method.STANDARD_GP.value, Method.SGD_FIT.value],
                   default=Method.STANDARD_GP.value)
    p.add_argument('--design', required=True)
    p.add_argument('--function', default=None, help=f"one of: {', '.join(available())}")
    p.add_argument('--data', default=None, help="tabulated target CSV (x1..xd,y) instead of --function")
    p.set_defaults(handler=cmd_fit_predict)

    p = sub.add_parser('ape', parents=[common, evaluation, trend, ape], help="run APE with checkpointed scoring")
    p.add_argument('--function', required=True, help=f"one of: {', '.join(available())}")
    p.add_argument('--checkpoints', type=positive_int, nargs='+', default=None)
    p.set_defaults(handler=cmd_ape)

    p = sub.add_parser('report', parents=[common], help="merge and sort record CSVs")
    p.add_argument('inputs', nargs='+')
    p.add_argument('--report', default=None, help="output CSV (default: <out>/report.csv)")
    p.add_argument('--log-columns', action='store_true', help="add log10 columns for log-log plots")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser('sweep', parents=[common, trend, ape], help="all methods on shared designs")
    p.add_argument('--function', required=True, help=f"one of: {', '.join(available())}")
    p.add_argument('--sizes', type=positive_int, nargs='+', default=None, help="LHD sizes and APE checkpoints")
    p.add_argument('--etas', type=positive_int, nargs='+', default=None, help="sparse-grid levels")
    p.add_argument('--methods', choices=[m.value for m in Method], nargs='+', default=None)
    p.add_argument('--n-test', type=positive_int, default=DEFAULT_N_TEST)
    p.add_argument('--workers', type=positive_int, default=1)
    p.add_argument('--log-columns', action='store_true')
    p.set_defaults(handler=cmd_sweep)
    return parser


def check_args(parser: argparse.ArgumentParser, args) -> None:
    """Cross-flag rules argparse cannot express."""
    if args.command == 'design':
        if args.generator == 'lhd' and args.n is None:
            parser.error("design lhd needs --n")
        if args.generator == 'sgd' and args.eta is None:
            parser.error("design sgd needs --eta")
    if args.command == 'fit' and args.function is None and args.data is None:
        parser.error("fit needs --function or --data")
    if args.command in ('ape', 'sweep') and args.N < args.n0:
        parser.error(f"--N ({args.N}) must be >= --n0 ({args.n0})")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    check_args(parser, args)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[%(name)s] %(message)s", stream=sys.stdout, force=True,
    )

    print("=" * 70)
    print(f"Adaptive Partitioning Emulator Bench v{__version__}: {args.command}")
    print("=" * 70)
    try:
        result = args.handler(args)
    except (EmulatorError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print("=" * 70)
        return 1
    logger.info(f"Done: {result}")
    print("=" * 70)
    return 0


if __name__ == '__main__':
    sys.exit(main())
