import math
from dataclasses import dataclass, field

import numpy as np
import pytest

from msekit.catalog import load_all, load_dataset
from msekit.data import CellProbabilities, CountTable, DataError, Dataset, \
    InclusionPattern, simulate_counts
from msekit.estimate import Estimate
from msekit.estimators import DgaEstimator, IndependenceEstimator, make_estimator
from msekit.evaluation import consistency_csv_rows, consistency_metrics, \
    default_checkpoints, estimate_trajectory, run_internal_consistency, \
    sensitivity_sweep, sweep_csv_rows, trajectory_csv_rows
from msekit.loglinear import independence_point_estimate

P = InclusionPattern.of

# (dataset, reference) -> (ground truth, conditioned n_obs, conditioned overlap),
# from the published conditioned-data table
EXPECTED_ROWS = {
    ("uk", "LA"): (94, 40, 3),
    ("uk", "NG"): (567, 104, 7),
    ("uk", "PFNCA"): (1169, 174, 6),
    ("uk", "GO"): (807, 112, 6),
    ("netherlands", "IO"): (929, 173, 13),
    ("netherlands", "K"): (1348, 49, 0),
    ("netherlands", "P"): (4812, 346, 14),
    ("netherlands", "R"): (742, 92, 3),
    ("netherlands", "Z"): (848, 216, 12),
    ("australia", "B"): (77, 64, 23),
    ("australia", "C"): (260, 62, 22),
}

TRUTH_BY_SIZE = {n_obs: truth for truth, n_obs, _ in EXPECTED_ROWS.values()}


def _estimate(name, point, lower=None, upper=None, seed=0):
    lower = point if lower is None else lower
    upper = point if upper is None else upper
    return Estimate(estimator=name, point=point, lower=lower, upper=upper,
                    level=0.95, seed=seed, fingerprint="0" * 12)


@dataclass
class OracleEstimator:
    """Returns the known ground truth, looked up by conditioned size."""

    name: str = "oracle"

    def run(self, table, seed):
        truth = TRUTH_BY_SIZE[table.n_obs]
        return _estimate(self.name, float(truth), truth - 1.0, truth + 1.0, seed)


@dataclass
class RatioEstimator:
    """Deterministic toy estimator: a fixed multiple of the observed count."""

    factor: float = 2.0
    width: float = 0.5
    name: str = "ratio"

    def run(self, table, seed):
        point = self.factor * table.n_obs
        return _estimate(self.name, point, point * (1 - self.width),
                         point * (1 + self.width), seed)


@dataclass
class RecordingEstimator:
    name: str = "recorder"
    tables: list = field(default_factory=list)

    def run(self, table, seed):
        self.tables.append(table)
        return _estimate(self.name, float(table.n_obs))


@dataclass
class FailingBelow:
    cutoff: int
    name: str = "failer"

    def run(self, table, seed):
        if table.n_obs < self.cutoff:
            raise RuntimeError("too small")
        return _estimate(self.name, float(table.n_obs))


class TestInternalConsistency:
    def test_exactly_eleven_rows_with_published_triples(self):
        results = run_internal_consistency(load_all(), [OracleEstimator()], seed=0)
        got = {(r.dataset, r.reference_list): (r.ground_truth, r.n_obs, r.overlap)
               for r in results}
        assert got == EXPECTED_ROWS

    def test_oracle_estimator_scores_perfectly(self):
        results = run_internal_consistency(load_all(), [OracleEstimator()], seed=0)
        metrics = consistency_metrics(results)["oracle"]
        assert metrics.mean == pytest.approx(0.0, abs=1e-12)
        assert metrics.rmse == pytest.approx(0.0, abs=1e-12)
        assert metrics.median == pytest.approx(0.0, abs=1e-12)
        assert metrics.coverage == 1.0
        assert metrics.n_rows == 11

    def test_netherlands_k_is_outlier_for_loglinear_estimators(self):
        ned = load_dataset("netherlands")
        results = run_internal_consistency(
            [ned], [IndependenceEstimator(bootstrap=60)], seed=3)
        by_ref = {r.reference_list: r for r in results}
        k_row = by_ref["K"]
        assert k_row.overlap == 0
        assert k_row.outlier
        assert "independence" in k_row.outlier_reason
        assert "independence" in k_row.errors
        others = [r for ref, r in by_ref.items() if ref != "K"]
        assert all(not r.outlier for r in others)

    def test_metrics_drop_outlier_rows(self):
        ned = load_dataset("netherlands")
        results = run_internal_consistency(
            [ned], [IndependenceEstimator(bootstrap=60)], seed=3)
        metrics = consistency_metrics(results)["independence"]
        assert metrics.n_rows == 4  # K dropped
        assert metrics.n_rows_all == 4

    def test_coverage_granularity(self):
        results = run_internal_consistency(load_all(), [RatioEstimator()], seed=0)
        kept = [r for r in results if not r.outlier]
        assert len(kept) == 11
        coverage = consistency_metrics(results)["ratio"].coverage
        assert coverage == pytest.approx(round(coverage * 11) / 11)

    def test_per_row_seeds_are_stable(self):
        a = run_internal_consistency(load_all(), [RatioEstimator()], seed=5)
        b = run_internal_consistency(load_all(), [RatioEstimator()], seed=5)
        sa = {(r.dataset, r.reference_list): r.estimates["ratio"].seed for r in a}
        sb = {(r.dataset, r.reference_list): r.estimates["ratio"].seed for r in b}
        assert sa == sb

    def test_jobs_parallelism_matches_serial(self):
        serial = run_internal_consistency(load_all(), [RatioEstimator()], seed=5, jobs=1)
        parallel = run_internal_consistency(load_all(), [RatioEstimator()], seed=5, jobs=4)
        key = lambda r: (r.dataset, r.reference_list)
        assert sorted(map(key, serial)) == sorted(map(key, parallel))

    def test_csv_rows_schema(self):
        results = run_internal_consistency(load_all(), [RatioEstimator()], seed=0)
        rows = consistency_csv_rows(results)
        assert list(rows[0]) == ["dataset", "reference", "truth", "estimator",
                                 "point", "lower", "upper", "logbias", "covered",
                                 "outlier"]
        assert len(rows) == 11

    def test_empty_results_rejected(self):
        with pytest.raises(DataError):
            consistency_metrics([])


class TestTrajectory:
    def test_checkpoint_at_n_reproduces_full_data_estimate(self):
        d = load_dataset("australia")
        estimator = DgaEstimator(n_max_factor=10)
        series = estimate_trajectory(d, estimator, checkpoints=[200, d.table.n_obs],
                                     seed=17)
        full = estimator.run(d.table, 17)
        last = series.points[-1]
        assert last.checkpoint == d.table.n_obs
        assert last.estimate.point == full.point
        assert (last.estimate.lower, last.estimate.upper) == (full.lower, full.upper)

    def test_extension_doubles_the_multiset(self):
        d = load_dataset("australia")
        recorder = RecordingEstimator()
        n = d.table.n_obs
        estimate_trajectory(d, recorder, checkpoints=[2 * n], seed=3)
        seen = recorder.tables[0]
        assert seen.n_obs == 2 * n
        for pat, count in d.table.counts.items():
            assert seen.counts[pat] == 2 * count

    def test_determinism(self):
        d = load_dataset("new-orleans")
        s1 = estimate_trajectory(d, RatioEstimator(), checkpoints=[50, 100, 185], seed=9)
        s2 = estimate_trajectory(d, RatioEstimator(), checkpoints=[50, 100, 185], seed=9)
        pts1 = [(p.checkpoint, p.estimate.point) for p in s1.points]
        pts2 = [(p.checkpoint, p.estimate.point) for p in s2.points]
        assert pts1 == pts2

    def test_failures_become_gaps(self):
        d = load_dataset("new-orleans")
        series = estimate_trajectory(d, FailingBelow(cutoff=100),
                                     checkpoints=[50, 150], seed=1)
        assert series.points[0].estimate is None
        assert series.points[0].error is not None
        assert series.points[1].estimate is not None

    def test_checkpoint_domain(self):
        d = load_dataset("new-orleans")
        with pytest.raises(DataError):
            estimate_trajectory(d, RatioEstimator(), checkpoints=[0], seed=1)
        with pytest.raises(DataError):
            estimate_trajectory(d, RatioEstimator(), checkpoints=[3 * d.table.n_obs],
                                seed=1)

    def test_default_checkpoints(self):
        grid = default_checkpoints(2744)
        assert grid[0] >= 30 and grid[-1] == 2 * 2744
        assert grid == sorted(set(grid))

    def test_ratio_column(self):
        d = load_dataset("new-orleans")
        series = estimate_trajectory(d, RatioEstimator(factor=3.0), checkpoints=[100],
                                     seed=1)
        assert series.points[0].ratio == pytest.approx(3.0)
        rows = trajectory_csv_rows(series)
        assert list(rows[0]) == ["dataset", "estimator", "seed", "m", "point",
                                 "lower", "upper", "ratio"]

    @pytest.mark.slow
    def test_simulated_independence_ratio_near_truth(self):
        # data simulated from an independence fit: at the final in-sample
        # checkpoint the estimate-to-count ratio should sit near the known
        # truth for nearly every ordering seed
        cells = CellProbabilities.independent([0.04, 0.17, 0.36, 0.28, 0.12])
        N = 12_000
        table = simulate_counts(cells, N, seed=2001,
                                list_names=("l1", "l2", "l3", "l4", "l5"))
        d = Dataset(name="sim", table=table)
        n = table.n_obs

        @dataclass
        class PointOnly:
            name: str = "independence-point"

            def run(self, t, seed):
                p = independence_point_estimate(t)
                return _estimate(self.name, p)

        hits = 0
        for seed in range(50):
            series = estimate_trajectory(d, PointOnly(), checkpoints=[n], seed=seed)
            ratio = series.points[0].ratio
            hits += abs(ratio - N / n) <= 0.2 * N / n
        assert hits >= 45


class TestSweeps:
    def test_singleton_grid_matches_direct_call(self):
        d = load_dataset("australia")
        points = sensitivity_sweep(d, "dga-kappa", [0.5], seed=2, n_max_factor=10)
        direct = DgaEstimator(kappa=0.5, n_max_factor=10).run(d.table, 2)
        assert points[0].estimate.point == direct.point
        assert points[0].estimate.upper == direct.upper

    def test_dga_beta_grid_order_and_schema(self):
        d = load_dataset("australia")
        grid = [0.2, 0.5, 0.8]
        points = sensitivity_sweep(d, "dga-beta", grid, seed=2, kappa=0.1,
                                   n_max_factor=10)
        assert [p.value for p in points] == grid
        rows = sweep_csv_rows("dga-beta", points)
        assert list(rows[0]) == ["kind", "value", "point", "lower", "upper"]
        assert all(r["point"] != "" for r in rows)

    def test_unknown_kind(self):
        with pytest.raises(DataError, match="sweep kind"):
            sensitivity_sweep(load_dataset("australia"), "nope", [0.1])

    def test_empty_grid(self):
        with pytest.raises(DataError, match="empty"):
            sensitivity_sweep(load_dataset("australia"), "dga-kappa", [])

    def test_failures_recorded_as_gaps(self):
        # a sparsemse sweep on a two-list zero-overlap table cannot fit
        t = CountTable(("a", "b"), {P(1, 0): 60, P(0, 1): 40})
        d = Dataset(name="degenerate", table=t)
        points = sensitivity_sweep(d, "sparsemse-threshold", [0.02], seed=0,
                                   bootstrap=60)
        assert points[0].estimate is None
        assert points[0].error is not None
