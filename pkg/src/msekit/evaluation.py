"""Evaluation harnesses: internal consistency against reference-list ground
truth, estimate trajectories under hypothetical observation orders, and
hyperparameter sensitivity sweeps."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import ConditionedDataset, CountTable, DataError, Dataset, ExclusionNotice, \
    InclusionPattern, condition_on_reference
from .estimate import Estimate
from .estimators import Estimator


def _row_seed(base_seed: int, *labels: str) -> int:
    digest = hashlib.sha256(("\x1f".join(labels) + f"\x1f{base_seed}").encode()).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass(frozen=True)
class ConsistencyResult:
    dataset: str
    reference_list: str
    ground_truth: int
    n_obs: int
    overlap: int
    estimates: dict[str, Optional[Estimate]]
    errors: dict[str, str]

    @property
    def outlier(self) -> bool:
        return any(e is None or not math.isfinite(e.point) for e in self.estimates.values())

    @property
    def outlier_reason(self) -> Optional[str]:
        bad = [name for name, e in self.estimates.items()
               if e is None or not math.isfinite(e.point)]
        if not bad:
            return None
        return "non-finite estimate from " + ", ".join(sorted(bad))

    def log_relative_bias(self, estimator: str) -> float:
        e = self.estimates.get(estimator)
        if e is None or not math.isfinite(e.point) or e.point <= 0:
            return float("nan")
        return math.log(e.point / self.ground_truth)

    def covered(self, estimator: str) -> Optional[bool]:
        e = self.estimates.get(estimator)
        if e is None or not math.isfinite(e.point):
            return None
        return e.covers(self.ground_truth)


def run_internal_consistency(
    datasets: Sequence[Dataset],
    estimators: Sequence[Estimator],
    min_obs: int = 30,
    seed: int = 0,
    jobs: int = 1,
) -> list[ConsistencyResult]:
    """Condition every dataset on every list, drop small conditioned tables,
    and apply each estimator to the rest with per-row derived seeds.

    Estimator failures are captured per row, never raised: a conditioned
    list with no overlap leaves the log-linear estimators with an unbounded
    fit, and such rows surface as outliers.
    """
    rows: list[tuple[str, str, ConditionedDataset]] = []
    for d in datasets:
        for ref in d.table.list_names:
            conditioned = condition_on_reference(d, ref, min_obs=min_obs)
            if isinstance(conditioned, ExclusionNotice):
                continue
            rows.append((d.name, ref, conditioned))

    def run_row(item):
        name, ref, conditioned = item
        estimates: dict[str, Optional[Estimate]] = {}
        errors: dict[str, str] = {}
        for est in estimators:
            row_seed = _row_seed(seed, name, ref, est.name)
            try:
                estimates[est.name] = est.run(conditioned.table, row_seed)
            except Exception as err:
                estimates[est.name] = None
                errors[est.name] = f"{type(err).__name__}: {err}"
        return ConsistencyResult(
            dataset=name, reference_list=ref,
            ground_truth=conditioned.ground_truth,
            n_obs=conditioned.table.n_obs, overlap=conditioned.table.overlap,
            estimates=estimates, errors=errors,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_row, rows))
    else:
        results = [run_row(item) for item in rows]
    return results


@dataclass(frozen=True)
class EstimatorMetrics:
    estimator: str
    mean: float
    rmse: float
    median: float
    coverage: float
    n_rows: int
    coverage_all_rows: Optional[float]
    n_rows_all: int


def consistency_metrics(
    results: Sequence[ConsistencyResult],
    drop_outliers: bool = True,
    per_estimator_drop: bool = False,
) -> dict[str, EstimatorMetrics]:
    """Per-estimator summary of log relative bias and interval coverage.

    With row-wise dropping (default) a row any estimator failed on is
    excluded for all estimators; the alternative drops rows per estimator.
    Coverage is reported both over the retained rows and over every row
    where the estimator produced an interval (the denominator convention
    differs between the two).
    """
    if not results:
        raise DataError("no consistency results")
    names = sorted({name for r in results for name in r.estimates})
    out = {}
    for name in names:
        if drop_outliers and not per_estimator_drop:
            rows = [r for r in results if not r.outlier]
        elif drop_outliers:
            rows = [r for r in results if r.covered(name) is not None]
        else:
            rows = list(results)
        biases = np.array([r.log_relative_bias(name) for r in rows])
        cover = [r.covered(name) for r in rows]
        finite = np.isfinite(biases)
        if not finite.any():
            raise DataError(f"no usable rows for estimator {name!r}")
        biases = biases[finite]
        cover = [c for c, ok in zip(cover, finite) if ok and c is not None]
        all_cover = [r.covered(name) for r in results if r.covered(name) is not None]
        out[name] = EstimatorMetrics(
            estimator=name,
            mean=float(np.mean(biases)),
            rmse=float(np.sqrt(np.mean(biases ** 2))),
            median=float(np.median(biases)),
            coverage=float(np.mean(cover)) if cover else float("nan"),
            n_rows=len(biases),
            coverage_all_rows=float(np.mean(all_cover)) if all_cover else None,
            n_rows_all=len(all_cover),
        )
    return out


@dataclass(frozen=True)
class TrajectoryPoint:
    checkpoint: int
    estimate: Optional[Estimate]
    error: Optional[str] = None

    @property
    def ratio(self) -> float:
        if self.estimate is None:
            return float("nan")
        return self.estimate.point / self.checkpoint


@dataclass(frozen=True)
class TrajectorySeries:
    dataset: str
    estimator: str
    seed: int
    points: tuple[TrajectoryPoint, ...]

    def checkpoints(self) -> list[int]:
        return [p.checkpoint for p in self.points]


def default_checkpoints(n_obs: int, count: int = 50) -> list[int]:
    lo = max(30, n_obs // 20)
    hi = 2 * n_obs
    if lo >= hi:
        lo = 1
    grid = np.unique(np.round(np.linspace(lo, hi, count)).astype(int))
    return [int(m) for m in grid if 1 <= m <= hi]


def estimate_trajectory(
    d: Dataset,
    estimator: Estimator,
    checkpoints: Optional[Sequence[int]] = None,
    seed: int = 0,
    jobs: int = 1,
) -> TrajectorySeries:
    """Estimates along a hypothetical observation order.

    The observed multiset is put in a random order drawn from the seed; a
    second random order extends the series to twice the observed size by
    replaying the data.  Each checkpoint estimate uses the first m patterns
    and the shared base seed, so the checkpoint at exactly n_obs reproduces
    the full-data estimate.  Estimator failures are recorded as gaps.
    """
    table = d.table
    n = table.n_obs
    if checkpoints is None:
        checkpoints = default_checkpoints(n)
    checkpoints = sorted(set(int(m) for m in checkpoints))
    if any(m < 1 or m > 2 * n for m in checkpoints):
        raise DataError(f"checkpoints must lie in [1, {2 * n}]")
    rows = table.expand()
    rng = np.random.default_rng(seed)
    sigma = rng.permutation(n)
    pi = rng.permutation(n)
    series = np.vstack([rows[sigma], rows[pi]])

    def run_checkpoint(m: int) -> TrajectoryPoint:
        counts: dict[InclusionPattern, int] = {}
        for bits in series[:m]:
            pat = InclusionPattern(tuple(int(b) for b in bits))
            counts[pat] = counts.get(pat, 0) + 1
        sub = CountTable(table.list_names, counts)
        try:
            return TrajectoryPoint(checkpoint=m, estimate=estimator.run(sub, seed))
        except Exception as err:
            return TrajectoryPoint(checkpoint=m, estimate=None,
                                   error=f"{type(err).__name__}: {err}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = tuple(pool.map(run_checkpoint, checkpoints))
    else:
        points = tuple(run_checkpoint(m) for m in checkpoints)
    return TrajectorySeries(dataset=d.name, estimator=estimator.name, seed=seed,
                            points=points)


SWEEP_KINDS = ("sparsemse-threshold", "dga-kappa", "dga-beta")


@dataclass(frozen=True)
class SweepPoint:
    value: float
    estimate: Optional[Estimate]
    error: Optional[str] = None


def sensitivity_sweep(
    d: Dataset,
    kind: str,
    grid: Sequence[float],
    seed: int = 0,
    jobs: int = 1,
    **fixed,
) -> list[SweepPoint]:
    """One estimate per grid value of a single tuning parameter, with all
    runs sharing the same seed.  Failures are recorded as gaps."""
    if kind not in SWEEP_KINDS:
        raise DataError(f"unknown sweep kind {kind!r}; choose from {SWEEP_KINDS}")
    grid = [float(v) for v in grid]
    if not grid:
        raise DataError("empty sweep grid")

    from .estimators import DgaEstimator, SparseMseEstimator

    def build(value: float) -> Estimator:
        if kind == "sparsemse-threshold":
            return SparseMseEstimator(threshold=value, **fixed)
        if kind == "dga-kappa":
            return DgaEstimator(kappa=value, **fixed)
        return DgaEstimator(edge_beta=value, **fixed)

    def run_point(value: float) -> SweepPoint:
        try:
            return SweepPoint(value=value, estimate=build(value).run(d.table, seed))
        except Exception as err:
            return SweepPoint(value=value, estimate=None,
                              error=f"{type(err).__name__}: {err}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_point, grid))
    return [run_point(v) for v in grid]


def consistency_csv_rows(results: Sequence[ConsistencyResult]) -> list[dict]:
    rows = []
    for r in sorted(results, key=lambda r: (r.dataset, r.reference_list)):
        for name in sorted(r.estimates):
            e = r.estimates[name]
            rows.append({
                "dataset": r.dataset,
                "reference": r.reference_list,
                "truth": r.ground_truth,
                "estimator": name,
                "point": "" if e is None else e.point,
                "lower": "" if e is None else e.lower,
                "upper": "" if e is None else e.upper,
                "logbias": "" if e is None else r.log_relative_bias(name),
                "covered": "" if r.covered(name) is None else int(r.covered(name)),
                "outlier": int(r.outlier),
            })
    return rows


def trajectory_csv_rows(series: TrajectorySeries) -> list[dict]:
    rows = []
    for p in series.points:
        rows.append({
            "dataset": series.dataset,
            "estimator": series.estimator,
            "seed": series.seed,
            "m": p.checkpoint,
            "point": "" if p.estimate is None else p.estimate.point,
            "lower": "" if p.estimate is None else p.estimate.lower,
            "upper": "" if p.estimate is None else p.estimate.upper,
            "ratio": "" if p.estimate is None else p.ratio,
        })
    return rows


def sweep_csv_rows(kind: str, points: Sequence[SweepPoint]) -> list[dict]:
    rows = []
    for p in points:
        rows.append({
            "kind": kind,
            "value": p.value,
            "point": "" if p.estimate is None else p.estimate.point,
            "lower": "" if p.estimate is None else p.estimate.lower,
            "upper": "" if p.estimate is None else p.estimate.upper,
        })
    return rows
