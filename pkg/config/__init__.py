"""
Global configuration constants for the Adaptive Partitioning Emulator.

All tunable defaults live here. See config/PARAMETERS.md for the rationale
behind every value, especially the jitter ladder, the theta search box and
the optimizer budget.
"""

import os
from pathlib import Path

# ─────────────────────────────────────────────
# GP FITTING
# ─────────────────────────────────────────────
# Diagonal inflation added to every correlation matrix before factorization.
# On factorization failure the jitter is escalated ×JITTER_GROWTH until it
# would exceed MAX_JITTER, then an IllConditionedError is raised.
DEFAULT_JITTER: float = 1e-8
MAX_JITTER:     float = 1e-4
JITTER_GROWTH:  float = 10.0

# Theta search box, per dimension, in region-local coordinates (every region
# is rescaled to [0,1]^d before fitting, so one box serves all regions).
THETA_LOWER: float = 1e-2
THETA_UPPER: float = 1e2
THETA_BOUNDS: tuple[float, float] = (THETA_LOWER, THETA_UPPER)

FIT_MULTISTARTS: int = 5      # Nelder–Mead restarts (first at the log-box centre)
FIT_MAX_EVALS:   int = 400    # Likelihood evaluations per restart
FIT_XATOL:       float = 1e-4 # Simplex tolerance in log-theta
FIT_FATOL:       float = 1e-6 # Tolerance on the concentrated log-likelihood

# A profile variance below (DEGENERATE_SIGMA2_RTOL * max|y|)^2 is treated as
# exactly zero: the model interpolates a constant.
DEGENERATE_SIGMA2_RTOL: float = 1e-12

# Prediction rows processed per block; bounds the m×n cross-correlation buffer.
PREDICT_CHUNK: int = 2048

# ─────────────────────────────────────────────
# DESIGNS
# ─────────────────────────────────────────────
ROUND_DECIMALS:   int = 12           # Canonical rounding before point-set union
CSV_FLOAT_FORMAT: str = "%.17g"      # 17 significant digits round-trip float64
MAX_KRONECKER_POINTS: int = 200      # Largest full grid accepted by the Kronecker oracle

# ─────────────────────────────────────────────
# APE
# ─────────────────────────────────────────────
DEFAULT_N0: int = 100
DEFAULT_N:  int = 1000
# Children of a split must each keep at least this many points; smaller sides
# make the split invalid (leave-one-out needs three points per region).
MIN_SPLIT_SIDE_POINTS: int = 2
MIN_LOO_POINTS:        int = 3

# ─────────────────────────────────────────────
# TEST FUNCTIONS
# ─────────────────────────────────────────────
# Corner-peak a-vector for d = 10, sorted largest to smallest. Published
# parameter set reused for comparison with earlier studies; sums to 1.85.
CORNER_PEAK_A_10D: tuple[float, ...] = (
    0.4761, 0.4500, 0.3297, 0.2553, 0.0963,
    0.0764, 0.0714, 0.0648, 0.0286, 0.0014,
)

# ─────────────────────────────────────────────
# BENCHMARK / OUTPUT
# ─────────────────────────────────────────────
DEFAULT_N_TEST: int = 10_000
DEFAULT_SEED:   int = 0

# Named RNG streams derived from the master seed. Ids are fixed forever:
# append new streams, never renumber, or old results stop reproducing.
SEED_STREAMS: dict = {
    'design':  0,
    'testset': 1,
    'ape':     2,
    'fit':     3,
}

OUTPUT_DIR_ENV: str = "APE_BENCH_OUTPUT_DIR"
OUTPUT_DIR_FALLBACK: str = "results"


def default_output_dir() -> Path:
    """Output directory from $APE_BENCH_OUTPUT_DIR, read at call time."""
    return Path(os.environ.get(OUTPUT_DIR_ENV, OUTPUT_DIR_FALLBACK))


RECORD_COLUMNS: tuple[str, ...] = (
    'method', 'function', 'n', 'rmspe_scaled', 'mape_scaled', 'time_minutes', 'seed',
)
TRACE_FLUSH_EVERY: int = 1    # Trace lines between flushes (iterations are slow)
