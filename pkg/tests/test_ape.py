"""Leave-one-out scores, split choice, region splitting and the APE loop."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.ape import ApeConfig, ErrorMeasure, LooMode, Partition, Region
from src.ape.cv import cross_validate, loo_cv_error, loo_residuals_closed_form, loo_residuals_refit
from src.ape.loop import BudgetTracker, partition_to_json, predict_partitioned, run_ape, write_partition
from src.ape.split import choose_split_dimension, split_ratios, split_region
from src.core import CorrelationParams, FitConfig, TrendBasis, TrendKind, build_model
from src.design import Box, DesignKind
from src.design.lhd import lhd_points
from src.errors import (
    EvaluationError, InsufficientDataError, InvalidArgumentError, NoValidSplitError,
)
from src.rng import derive_rng
from src.testfns import TabulatedTarget, get_target

JITTER = 1e-8
QUICK_FIT = FitConfig(multistarts=2, max_evals=150)


def quick_config(**overrides) -> ApeConfig:
    settings = {'n0': 6, 'N': 48, 'seed': 3, 'fit': QUICK_FIT}
    settings.update(overrides)
    return ApeConfig(**settings)


def brute_force_split(X, y, box):
    """argmin of V_within / V_between over dimensions with >= 2 points per side."""
    best, best_ratio = None, np.inf
    for j in range(X.shape[1]):
        upper = X[:, j] >= 0.5 * (box.lo[j] + box.hi[j])
        lo_side, hi_side = y[~upper], y[upper]
        if lo_side.size < 2 or hi_side.size < 2:
            continue
        m1, m2 = lo_side.mean(), hi_side.mean()
        m = 0.5 * (m1 + m2)
        between = (m1 - m) ** 2 + (m2 - m) ** 2
        within = 0.5 * (np.var(lo_side, ddof=1) + np.var(hi_side, ddof=1))
        ratio = within / between if between > 0 else np.inf
        if best is None or ratio < best_ratio:
            best, best_ratio = j, ratio
    return best


class TestLeaveOneOut:
    def test_closed_form_matches_refit(self, rng):
        basis = TrendBasis(TrendKind.CONSTANT, 2)
        for _ in range(20):
            n = int(rng.integers(5, 11))
            X = lhd_points(n, 2, rng)
            y = rng.normal(size=n)
            params = CorrelationParams(rng.uniform(0.1, 0.4, size=2))
            model = build_model(X, y, basis, params, JITTER)
            assert_allclose(loo_residuals_closed_form(model),
                            loo_residuals_refit(X, y, basis, params, JITTER), rtol=1e-8, atol=1e-8)

    def test_closed_form_matches_refit_with_linear_trend(self, rng):
        basis = TrendBasis(TrendKind.LINEAR, 2)
        X = lhd_points(8, 2, rng)
        y = 2.0 * X[:, 0] - X[:, 1] + 0.3 * np.sin(6.0 * X[:, 0])
        params = CorrelationParams([0.3, 0.3])
        model = build_model(X, y, basis, params, JITTER)
        assert_allclose(loo_residuals_closed_form(model),
                        loo_residuals_refit(X, y, basis, params, JITTER), rtol=1e-6, atol=1e-9)

    def test_six_point_instance(self):
        X = np.array([[0.1, 0.1], [0.4, 0.8], [0.9, 0.3], [0.2, 0.6], [0.7, 0.9], [0.55, 0.45]])
        y = np.sin(3.0 * X[:, 0]) + X[:, 1] ** 2
        basis = TrendBasis(TrendKind.CONSTANT, 2)
        params = CorrelationParams([0.35, 0.5])
        model = build_model(X, y, basis, params, JITTER)
        closed = loo_residuals_closed_form(model)
        assert_allclose(closed, loo_residuals_refit(X, y, basis, params, JITTER), rtol=1e-6, atol=1e-9)
        assert np.all(np.abs(closed) > 0.0)

    def test_constant_responses_score_zero(self, rng):
        X = lhd_points(7, 2, rng)
        y = np.full(7, 4.2)
        for mode in LooMode:
            config = quick_config(loo_mode=mode)
            assert loo_cv_error(X, y, config) == pytest.approx(0.0, abs=1e-20)

    def test_row_order_permutes_residuals(self, rng):
        basis = TrendBasis(TrendKind.CONSTANT, 3)
        X = rng.uniform(size=(9, 3))
        y = rng.normal(size=9)
        params = CorrelationParams([0.3, 0.4, 0.5])
        perm = rng.permutation(9)
        base = loo_residuals_closed_form(build_model(X, y, basis, params, JITTER))
        shuffled = loo_residuals_closed_form(build_model(X[perm], y[perm], basis, params, JITTER))
        assert_allclose(shuffled, base[perm], rtol=1e-8, atol=1e-12)
        assert np.mean(shuffled ** 2) == pytest.approx(np.mean(base ** 2), rel=1e-8)

    def test_error_measures(self, rng):
        X = lhd_points(10, 2, rng)
        y = np.cos(4.0 * X[:, 0]) * X[:, 1]
        model, mse = cross_validate(X, y, quick_config())
        resid = loo_residuals_closed_form(model)
        assert mse == pytest.approx(np.mean(resid ** 2), rel=1e-12)
        max_abs = loo_cv_error(X, y, quick_config(error_measure=ErrorMeasure.MAX_ABS))
        assert max_abs == pytest.approx(np.max(np.abs(resid)), rel=1e-12)

    def test_too_few_points(self):
        X = np.array([[0.1, 0.2], [0.7, 0.9]])
        with pytest.raises(InsufficientDataError):
            loo_cv_error(X, np.array([1.0, 2.0]), quick_config())
        with pytest.raises(InsufficientDataError):
            loo_residuals_refit(X, np.array([1.0, 2.0]), TrendBasis(TrendKind.CONSTANT, 2),
                                CorrelationParams([0.5, 0.5]))


class TestSplitChoice:
    # x1 in four levels, each paired with both x2 levels: y = x1 is symmetric in x2
    GRID = np.array([[a, b] for a in (0.1, 0.3, 0.6, 0.8) for b in (0.25, 0.75)])

    def region(self, box=None, n=None):
        return Region(box or Box.unit(2), np.arange(n if n is not None else self.GRID.shape[0]))

    def test_picks_informative_dimension(self):
        y = self.GRID[:, 0].copy()
        ratios = split_ratios(self.region(), self.GRID, y)
        assert np.isfinite(ratios[0]) and ratios[1] == np.inf
        assert choose_split_dimension(self.region(), self.GRID, y) == 0

    def test_relabeling_dimensions_permutes_choice(self):
        swapped = self.GRID[:, ::-1].copy()
        assert choose_split_dimension(self.region(), swapped, swapped[:, 1]) == 1

    def test_constant_responses_fall_back_to_widest(self):
        box = Box([0.0, 0.0], [0.5, 1.0])
        X = np.array([[a, b] for a in (0.05, 0.15, 0.3, 0.45) for b in (0.25, 0.75)])
        y = np.ones(8)
        assert np.all(split_ratios(self.region(box), X, y) == np.inf)
        assert choose_split_dimension(self.region(box), X, y) == 1

    def test_lowest_index_on_ties(self):
        box = Box.unit(2)
        X = np.array([[0.1, 0.1], [0.2, 0.2], [0.7, 0.7], [0.9, 0.9]])
        y = np.array([0.0, 1.0, 5.0, 6.0])
        ratios = split_ratios(Region(box, np.arange(4)), X, y)
        assert ratios[0] == ratios[1]
        assert choose_split_dimension(Region(box, np.arange(4)), X, y) == 0

    def test_agrees_with_brute_force(self, rng):
        for _ in range(100):
            X = rng.uniform(size=(10, 3))
            y = rng.normal(size=10)
            region = Region(Box.unit(3), np.arange(10))
            expected = brute_force_split(X, y, region.box)
            if expected is None:
                with pytest.raises(NoValidSplitError):
                    choose_split_dimension(region, X, y)
            else:
                assert choose_split_dimension(region, X, y) == expected

    def test_only_region_points_count(self):
        X = np.vstack([self.GRID, [[0.95, 0.95], [0.99, 0.05]]])
        y = np.concatenate([self.GRID[:, 0], [100.0, -100.0]])
        assert choose_split_dimension(self.region(n=8), X, y) == 0

    def test_no_valid_split(self):
        X = np.array([[0.1, 0.1], [0.2, 0.3], [0.3, 0.2]])
        with pytest.raises(NoValidSplitError):
            choose_split_dimension(Region(Box.unit(2), np.arange(3)), X, np.array([1.0, 2.0, 3.0]))

    def test_minimum_side_is_enforced(self):
        y = self.GRID[:, 0].copy()
        ratios = split_ratios(self.region(), self.GRID, y, min_side=5)
        assert np.all(np.isnan(ratios))


class TestSplitRegion:
    def test_children_and_membership(self):
        X = np.array([[0.1, 0.2], [0.5, 0.7], [0.9, 0.4], [0.3, 0.9]])
        partition = Partition.whole_domain(2, np.arange(4))
        split_region(partition, 0, 0, X, iteration=1)
        assert partition.K == 2
        lower, upper = partition.regions
        assert_array_equal(lower.box.hi, [0.5, 1.0])
        assert_array_equal(upper.box.lo, [0.5, 0.0])
        assert_array_equal(np.sort(lower.point_indices), [0, 3])
        assert_array_equal(np.sort(upper.point_indices), [1, 2])
        assert lower.cv_error is None and upper.model is None
        assert partition.split_log[-1].value == 0.5 and partition.split_log[-1].dim == 0
        assert partition.audit(X) == []

    def test_lower_child_keeps_id(self):
        X = np.random.default_rng(1).uniform(size=(20, 2))
        partition = Partition.whole_domain(2, np.arange(20))
        split_region(partition, 0, 1, X)
        split_region(partition, 1, 0, X)
        assert partition.K == 3
        assert_array_equal(partition.regions[0].box.hi, [1.0, 0.5])
        assert_array_equal(partition.regions[1].box.lo, [0.0, 0.5])
        assert_array_equal(partition.regions[1].box.hi, [0.5, 1.0])
        assert_array_equal(partition.regions[2].box.lo, [0.5, 0.5])
        assert partition.audit(X) == []

    def test_bad_region_or_dimension(self):
        partition = Partition.whole_domain(2, np.arange(2))
        X = np.array([[0.1, 0.1], [0.9, 0.9]])
        with pytest.raises(InvalidArgumentError):
            split_region(partition, 3, 0, X)
        with pytest.raises(InvalidArgumentError):
            split_region(partition, 0, 2, X)


class TestBudgetTracker:
    def test_checkpoints_sorted_and_crossed_once(self):
        tracker = BudgetTracker([30, 10, 20, 10])
        assert tracker.checkpoints == [10, 20, 30]
        assert tracker.crossed(5) == []
        assert tracker.crossed(25) == [10, 20]
        assert tracker.crossed(25) == []
        assert tracker.pending == [30]

    def test_counts_evaluations_and_enforces_limit(self):
        tracker = BudgetTracker(max_evaluations=5)
        values = tracker.evaluate(lambda X: X.sum(axis=1), np.ones((3, 2)))
        assert_array_equal(values, [2.0, 2.0, 2.0])
        assert tracker.evaluations == 3
        with pytest.raises(EvaluationError):
            tracker.evaluate(lambda X: X.sum(axis=1), np.ones((3, 2)))
        assert tracker.evaluations == 3

    def test_evaluation_time_excluded(self):
        tracker = BudgetTracker()
        tracker.stopwatch.start()
        seen = []

        def target(X):
            seen.append(tracker.stopwatch.running)
            return X[:, 0]

        tracker.evaluate(target, np.zeros((2, 1)))
        assert seen == [False]
        assert tracker.stopwatch.running

    def test_invalid_settings(self):
        with pytest.raises(InvalidArgumentError):
            BudgetTracker([0, 5])
        with pytest.raises(InvalidArgumentError):
            BudgetTracker(max_evaluations=0)


class TestApeConfig:
    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            ApeConfig(n0=10, N=5)
        with pytest.raises(InvalidArgumentError):
            ApeConfig(n0=0)
        assert ApeConfig(loo_mode='full-refit').loo_mode is LooMode.FULL_REFIT

    def test_n0_below_fit_minimum(self):
        with pytest.raises(InvalidArgumentError):
            ApeConfig(n0=4, N=10, trend='linear').validate_for(4)


class TestRunApe:
    @pytest.fixture(scope="class")
    def franke(self):
        return get_target("franke-2d")

    @pytest.fixture(scope="class")
    def three_splits(self, franke):
        return run_ape(franke, quick_config(max_iterations=3))

    def test_budget_equal_to_n0_keeps_one_region(self, franke):
        result = run_ape(franke, quick_config(N=6))
        assert result.partition.K == 1
        assert result.n == 6
        assert result.trace == []
        assert result.stop_reason == "reached N"
        assert result.partition.regions[0].cv_error >= 0.0

    def test_first_iteration_doubles_design(self, franke):
        result = run_ape(franke, quick_config(max_iterations=1))
        assert result.partition.K == 2
        assert result.n == 12
        assert result.stop_reason == "max iterations"
        assert result.design.provenance.kind is DesignKind.APE

    def test_partition_stays_valid(self, three_splits):
        assert three_splits.partition.K == 4
        assert three_splits.partition.audit(three_splits.design.points) == []
        assert len(three_splits.partition.split_log) == 3
        assert_array_equal([t.K for t in three_splits.trace], [2, 3, 4])
        assert all(r.model is not None and r.cv_error is not None for r in three_splits.partition.regions)

    def test_untouched_regions_keep_cached_errors(self, three_splits):
        for before, after in zip(three_splits.trace, three_splits.trace[1:]):
            for k, error in enumerate(before.region_errors):
                if k != after.region_id:
                    assert after.region_errors[k] == error

    def test_split_region_has_largest_error(self, three_splits):
        for before, after in zip(three_splits.trace, three_splits.trace[1:]):
            errors = np.asarray(before.region_errors)
            assert after.region_id == int(np.argmax(errors))

    def test_deterministic(self, franke, three_splits):
        again = run_ape(franke, quick_config(max_iterations=3))
        assert_array_equal(again.design.points, three_splits.design.points)
        assert again.partition.errors() == three_splits.partition.errors()

    def test_parallel_children_same_result(self, franke, three_splits):
        parallel = run_ape(franke, quick_config(max_iterations=3, parallel_children=True))
        assert_array_equal(parallel.design.points, three_splits.design.points)
        assert parallel.partition.errors() == three_splits.partition.errors()

    def test_initial_design_from_ape_stream(self, three_splits):
        expected = lhd_points(6, 2, derive_rng(3, 'ape', 0))
        assert_array_equal(three_splits.design.points[:6], expected)

    def test_interpolates_training_points(self, three_splits):
        result = three_splits
        means, ses, owner = result.predict_many(result.design.points)
        assert_allclose(means, result.y, atol=1e-3)
        for k, region in enumerate(result.partition.regions):
            assert np.all(owner[region.point_indices] == k)

    def test_boundary_point_goes_to_upper_region(self, franke):
        result = run_ape(franke, quick_config(max_iterations=1))
        entry = result.partition.split_log[0]
        x0 = np.full(2, 0.3)
        x0[entry.dim] = entry.value
        mean, se, k = predict_partitioned(result.partition, x0)
        assert k == 1
        assert np.isfinite(mean) and se >= 0.0
        assert result.predict(x0)[2] == 1

    def test_outside_domain_rejected(self, three_splits):
        with pytest.raises(InvalidArgumentError):
            three_splits.predict(np.array([1.2, 0.5]))
        with pytest.raises(InvalidArgumentError):
            three_splits.predict_many(np.array([[0.5, -0.1]]))

    def test_checkpoint_callback(self, franke):
        seen = []
        tracker = BudgetTracker(checkpoints=[6, 12])
        run_ape(franke, quick_config(max_iterations=1), tracker=tracker,
                on_checkpoint=lambda result, reached: seen.append((result.n, reached)))
        assert seen == [(6, [6]), (12, [12])]
        assert tracker.pending == []
        assert tracker.evaluations == 12
        assert not tracker.stopwatch.running

    def test_trace_file(self, franke, tmp_path):
        path = tmp_path / "trace.jsonl"
        result = run_ape(franke, quick_config(max_iterations=2), trace_path=path)
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert [line['iter'] for line in lines] == [1, 2]
        assert lines[-1]['K'] == result.partition.K
        assert lines[-1]['region_errors'] == list(result.trace[-1].region_errors)

    def test_partition_export(self, three_splits, tmp_path):
        entries = partition_to_json(three_splits.partition)
        assert [e['region_id'] for e in entries] == [0, 1, 2, 3]
        assert sum(len(e['point_indices']) for e in entries) == three_splits.n
        path = write_partition(three_splits.partition, tmp_path / "partition.json")
        assert json.loads(path.read_text()) == entries

    def test_evaluation_limit_returns_partial(self, franke):
        with pytest.raises(EvaluationError) as info:
            run_ape(franke, quick_config(), tracker=BudgetTracker(max_evaluations=8))
        partial = info.value.partial
        assert partial is not None
        assert partial.n == 6 and partial.partition.K == 1
        assert partial.stop_reason == "evaluation failure"

    def test_raw_callable_failure_keeps_partial(self, franke, tmp_path):
        class FailsOnThirdCall:
            d = 2

            def __init__(self):
                self.calls = 0

            def __call__(self, X):
                self.calls += 1
                if self.calls == 3:
                    raise RuntimeError("simulator crashed")
                return franke(X)

        tracker = BudgetTracker()
        path = tmp_path / "trace.jsonl"
        with pytest.raises(EvaluationError) as info:
            run_ape(FailsOnThirdCall(), quick_config(N=60), tracker=tracker, trace_path=path)
        assert isinstance(info.value.__cause__, RuntimeError)
        partial = info.value.partial
        assert partial.n == 12 and partial.partition.K == 2
        assert len(partial.trace) == 1
        assert partial.stop_reason == "evaluation failure"
        assert len(path.read_text().splitlines()) == 1
        assert not tracker.stopwatch.running

    def test_initial_design_failure_keeps_empty_partial(self):
        class Broken:
            d = 2

            def __call__(self, X):
                raise OSError("simulator binary missing")

        tracker = BudgetTracker()
        with pytest.raises(EvaluationError) as info:
            run_ape(Broken(), quick_config(parallel_children=True), tracker=tracker)
        assert info.value.partial.n == 0
        assert info.value.partial.trace == []
        assert not tracker.stopwatch.running

    def test_wrong_number_of_values_rejected(self, franke):
        class Short:
            d = 2

            def __call__(self, X):
                return franke(X)[:-1]

        with pytest.raises(EvaluationError) as info:
            run_ape(Short(), quick_config())
        assert info.value.partial.n == 0

    def test_design_size_invariants_every_iteration(self, franke):
        config = quick_config(N=30)
        seen = []

        def check(result, reached):
            if not result.trace:
                return
            last = result.trace[-1]
            lower = result.partition.regions[last.region_id]
            upper = result.partition.regions[last.K - 1]
            seen.append((result.n, lower.n_points + upper.n_points))

        result = run_ape(franke, config, BudgetTracker(range(1, 31 + 2 * config.n0)), on_checkpoint=check)
        assert len(seen) == len(result.trace) >= 2
        for n, children in seen:
            assert n <= config.N + 2 * config.n0
            assert children == 2 * config.n0
        assert result.n <= config.N + 2 * config.n0
        assert [entry.iteration for entry in result.partition.split_log] == [t.iter for t in result.trace]

    def test_tabulated_target_fails_on_top_up(self, franke):
        points = lhd_points(6, 2, derive_rng(3, 'ape', 0))
        table = TabulatedTarget("table", points, franke(points))
        with pytest.raises(EvaluationError) as info:
            run_ape(table, quick_config())
        assert info.value.partial.n == 6

    def test_tolerance_stops_early(self, franke):
        result = run_ape(franke, quick_config(tolerance=1e6))
        assert result.stop_reason == "tolerance"
        assert result.partition.K == 1
