"""Scaled accuracy metrics, timing, test sets and record files."""

import time

import numpy as np
import pandas as pd
import pytest

from config import RECORD_COLUMNS
from src.errors import DegenerateTestSetError, InvalidArgumentError, RecordParseError
from src.metrics import (
    BenchRecord, Stopwatch, TestSet, evaluate, make_test_set, mape, rmspe, scale_metrics,
)
from src.metrics.records import append_records, read_records, read_test_set, write_test_set
from src.rng import derive_rng, derive_seed
from src.testfns import get_target


def record(n=10, method="APE", rmspe_scaled=0.5):
    return BenchRecord(method, "franke-4d", n, rmspe_scaled, 0.8, 0.01, 0)


class TestErrors:
    def test_small_example(self):
        truth = np.array([1.0, 2.0, 3.0, 4.0])
        pred = np.array([1.0, 2.5, 2.0, 4.0])
        assert rmspe(truth, pred) == pytest.approx(np.sqrt((0.25 + 1.0) / 4), rel=1e-15)
        assert mape(truth, pred) == 1.0

    def test_rmspe_never_below_mape(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 50))
            truth = rng.normal(size=n)
            pred = truth + rng.standard_cauchy(size=n)
            assert rmspe(truth, pred) <= mape(truth, pred) * (1.0 + 1e-12)

    @pytest.mark.parametrize("c", [0.3, -2.0])
    def test_constant_offset(self, c, rng):
        truth = rng.normal(size=40)
        assert rmspe(truth, truth + c) == pytest.approx(abs(c), rel=1e-12)
        assert mape(truth, truth + c) == pytest.approx(abs(c), rel=1e-12)

    def test_mean_predictor_scores_one(self, rng):
        truth = rng.normal(size=200)
        pred = np.full(200, truth.mean())
        r, m = scale_metrics(truth, rmspe(truth, pred), mape(truth, pred))
        assert r == pytest.approx(1.0, rel=1e-12)
        assert m == pytest.approx(1.0, rel=1e-12)

    def test_affine_invariance(self, rng):
        truth = rng.normal(size=100)
        pred = truth + 0.1 * rng.normal(size=100)
        a, b = 3.5, -7.0
        base = scale_metrics(truth, rmspe(truth, pred), mape(truth, pred))
        moved = scale_metrics(a * truth + b, rmspe(a * truth + b, a * pred + b), mape(a * truth + b, a * pred + b))
        assert moved == pytest.approx(base, rel=1e-10)

    def test_constant_truth(self):
        with pytest.raises(DegenerateTestSetError):
            scale_metrics(np.ones(5), 0.0, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            rmspe([1.0, 2.0], [1.0])
        with pytest.raises(InvalidArgumentError):
            mape([], [])

    def test_evaluate_builds_record(self):
        truth = np.array([0.0, 1.0, 2.0, 3.0])
        rec = evaluate("StandardGP", "franke-2d", 4, truth, truth, 0.25, 7)
        assert rec == BenchRecord("StandardGP", "franke-2d", 4, 0.0, 0.0, 0.25, 7)

    def test_record_validation(self):
        with pytest.raises(InvalidArgumentError):
            record(rmspe_scaled=float('nan'))
        with pytest.raises(InvalidArgumentError):
            BenchRecord("APE", "f", 5, 0.1, 0.1, -1.0, 0)


class TestStopwatch:
    def test_context_manager_accumulates(self):
        watch = Stopwatch()
        with watch:
            assert watch.running
            time.sleep(0.01)
        first = watch.seconds
        assert first >= 0.01 and not watch.running
        time.sleep(0.01)
        assert watch.seconds == first
        with watch:
            time.sleep(0.01)
        assert watch.seconds >= first + 0.01
        assert watch.minutes == pytest.approx(watch.seconds / 60.0)

    def test_start_and_stop_idempotent(self):
        watch = Stopwatch().start().start()
        watch.stop().stop()
        assert watch.seconds >= 0.0 and not watch.running


class TestTestSets:
    def test_deterministic_uniform_points(self):
        target = get_target("franke-2d")
        a = make_test_set(target, 500, derive_rng(4, 'testset'), seed=4)
        b = make_test_set(target, 500, derive_rng(4, 'testset'), seed=4)
        np.testing.assert_array_equal(a.points, b.points)
        assert a.n == 500 and a.d == 2
        assert np.all((a.points >= 0.0) & (a.points < 1.0))
        np.testing.assert_allclose(a.truth, target(a.points))

    def test_file_round_trip(self, tmp_path, rng):
        test_set = TestSet(rng.uniform(size=(30, 3)), rng.normal(size=30), seed=2)
        path = write_test_set(test_set, tmp_path / "ts.csv")
        loaded = read_test_set(path, seed=2)
        np.testing.assert_array_equal(loaded.points, test_set.points)
        np.testing.assert_array_equal(loaded.truth, test_set.truth)
        assert path.read_text().splitlines()[0] == "x1,x2,x3,y"

    def test_too_small(self, rng):
        with pytest.raises(InvalidArgumentError):
            make_test_set(get_target("franke-2d"), 1, rng)
        with pytest.raises(InvalidArgumentError):
            TestSet(np.zeros((2, 2)), np.zeros(3))


class TestRecordFiles:
    def test_append_writes_header_once(self, tmp_path):
        path = tmp_path / "records.csv"
        append_records([record(10)], path)
        append_records([record(20), record(30)], path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(RECORD_COLUMNS)
        assert len(lines) == 4
        frame = read_records(path)
        assert frame['n'].tolist() == [10, 20, 30]
        assert frame['rmspe_scaled'].dtype == np.float64

    def test_extra_columns_are_kept(self, tmp_path):
        path = tmp_path / "records.csv"
        frame = pd.DataFrame([record().to_dict()])
        frame['log10_n'] = 1.0
        frame.to_csv(path, index=False)
        assert list(read_records(path).columns) == list(RECORD_COLUMNS) + ['log10_n']

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "records.csv"
        append_records([record(10), record(20)], path)
        with open(path, 'a') as fh:
            fh.write("APE,franke-4d,thirty,0.1,0.1,0.1,0\n")
        with pytest.raises(RecordParseError) as info:
            read_records(path)
        assert info.value.line == 4
        assert "(line 4)" in str(info.value)

    def test_negative_metric_reports_line(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text(",".join(RECORD_COLUMNS) + "\nAPE,f,10,-0.5,0.1,0.1,0\n")
        with pytest.raises(RecordParseError) as info:
            read_records(path)
        assert info.value.line == 2

    def test_missing_column(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("method,function,n\nAPE,f,10\n")
        with pytest.raises(RecordParseError) as info:
            read_records(path)
        assert info.value.line == 1


class TestSeedStreams:
    def test_streams_are_independent(self):
        a = derive_rng(0, 'design', 100).uniform(size=5)
        b = derive_rng(0, 'design', 101).uniform(size=5)
        c = derive_rng(0, 'testset').uniform(size=5)
        assert not np.array_equal(a, b) and not np.array_equal(a, c)
        np.testing.assert_array_equal(a, derive_rng(0, 'design', 100).uniform(size=5))

    def test_integer_seed(self):
        assert derive_seed(5, 'fit', 3) == derive_seed(5, 'fit', 3)
        assert derive_seed(5, 'fit', 3) != derive_seed(5, 'fit', 4)
        assert isinstance(derive_seed(5, 'fit'), int)

    def test_unknown_stream(self):
        with pytest.raises(InvalidArgumentError):
            derive_rng(0, 'noise')
        with pytest.raises(InvalidArgumentError):
            derive_rng(-1, 'design')
