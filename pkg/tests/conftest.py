"""Shared pytest setup: repo root on sys.path and the opt-in `slow` marker."""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the long accuracy reproductions")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running accuracy reproduction (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    """Isolated output directory, also exported as the default."""
    monkeypatch.setenv("APE_BENCH_OUTPUT_DIR", str(tmp_path / "results"))
    return tmp_path / "results"
