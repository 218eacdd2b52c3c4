"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured values.

Monte Carlo criteria run at reduced budgets by default; set
MSEKIT_FULL_BUDGET=1 to run the internal-consistency criterion with the
documented full estimator budgets (hours).
"""

import math
import os
import time

import numpy as np
import pytest
from scipy.signal import argrelextrema
from scipy.stats import gaussian_kde

from msekit.bias import (
    BetaHeterogeneity,
    DiscreteHeterogeneity,
    beta_bias_summary,
    bias_curve,
    empirical_bias_check,
    gamma_of,
    heterogeneity_cell_probs,
)
from msekit.catalog import load_all, load_dataset
from msekit.convergence import convergence_diagnostics
from msekit.data import CellProbabilities, CountTable, InclusionPattern, \
    condition_on_reference
from msekit.dga import DgaPrior, log_marginal_full_table
from msekit.estimators import DgaEstimator, IndependenceEstimator, LcmcrEstimator, \
    SparseMseEstimator, default_estimators
from msekit.evaluation import consistency_metrics, estimate_trajectory, \
    run_internal_consistency
from msekit.graphs import DecomposableGraph, edge_pairs, \
    enumerate_decomposable_graphs, has_induced_long_cycle
from msekit.lcmcr import LcmcrConfig, multi_chain_posterior
from msekit.loglinear import LogLinearModel, estimate_sparsemse, fit_loglinear

P = InclusionPattern.of

FULL_BUDGET = os.environ.get("MSEKIT_FULL_BUDGET") == "1"


def report(number: int, ok: bool, detail: str) -> None:
    from conftest import record_criterion

    status = "PASS" if ok else "FAIL"
    line = f"criterion {number:02d} {status}: {detail}"
    print(f"\n[acceptance] {line}")
    record_criterion(line)


@pytest.mark.acceptance
def test_criterion_01_dataset_checksums():
    expected = {
        "uk": (2744, 221),
        "new-orleans": (185, 12),
        "netherlands": (8234, 431),
        "western-us": (345, 23),
        "australia": (414, 69),
    }
    start = time.monotonic()
    got = {d.name: (d.table.n_obs, d.table.overlap) for d in load_all()}
    elapsed = time.monotonic() - start
    ok = got == expected and elapsed < 1.0
    report(1, ok, f"{got} in {elapsed:.2f}s")
    assert got == expected
    assert elapsed < 1.0


@pytest.mark.acceptance
def test_criterion_02_conditioning_exactness():
    expected = {
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
    start = time.monotonic()
    rows = {}
    for d in load_all():
        for ref in d.table.list_names:
            c = condition_on_reference(d, ref)
            if hasattr(c, "ground_truth"):
                rows[(d.name, ref)] = (c.ground_truth, c.table.n_obs, c.table.overlap)
    uk_la = condition_on_reference(load_dataset("uk"), "LA")
    uk_la_cells = dict(uk_la.table.counts)
    expected_cells = {
        P(1, 0, 0, 0): 15, P(0, 1, 0, 0): 19, P(0, 0, 1, 0): 3,
        P(1, 1, 0, 0): 1, P(1, 0, 1, 0): 1, P(1, 1, 1, 0): 1,
    }
    elapsed = time.monotonic() - start
    ok = rows == expected and uk_la_cells == expected_cells and elapsed < 1.0
    report(2, ok, f"{len(rows)} conditioned rows, UK|LA cells exact, {elapsed:.2f}s")
    assert rows == expected
    assert uk_la_cells == expected_cells
    assert elapsed < 1.0


@pytest.mark.acceptance
def test_criterion_03_lincoln_petersen_equivalence():
    start = time.monotonic()
    rng = np.random.default_rng(314159)
    worst = 0.0
    for _ in range(200):
        n10, n01, n11 = (int(v) for v in rng.integers(1, 800, size=3))
        table = CountTable(("a", "b"), {P(1, 0): n10, P(0, 1): n01, P(1, 1): n11})
        fit = fit_loglinear(table, LogLinearModel.independence(2))
        closed = (n10 + n11) * (n01 + n11) / n11
        worst = max(worst, abs(fit.n_hat - closed) / closed)
    elapsed = time.monotonic() - start
    ok = worst < 1e-6 and elapsed < 5.0
    report(3, ok, f"200 tables, worst relative gap {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-6
    assert elapsed < 5.0


@pytest.mark.acceptance
@pytest.mark.slow
def test_criterion_04_uk_sparsemse_interval():
    start = time.monotonic()
    uk = load_dataset("uk")
    seed = 77
    at_02 = estimate_sparsemse(uk.table, threshold=0.02, bootstrap=1000, seed=seed)
    narrow_ok = 9000 <= at_02.lower and at_02.upper <= 16000
    below = estimate_sparsemse(uk.table, threshold=0.008, bootstrap=1000, seed=seed)
    blowup_ok = below.upper > 25000
    elapsed = time.monotonic() - start
    ok = narrow_ok and blowup_ok and elapsed < 300
    report(4, ok,
           f"threshold 0.02 -> [{at_02.lower:.0f}, {at_02.upper:.0f}] "
           f"(need within [9000, 16000]); threshold 0.008 -> upper "
           f"{below.upper:.0f} (need > 25000); {elapsed:.0f}s")
    assert blowup_ok
    assert narrow_ok
    assert elapsed < 300


@pytest.mark.acceptance
def test_criterion_05_beta_model_bias():
    start = time.monotonic()
    r = beta_bias_summary(1.0, 8.0, 2)
    exact_ok = (
        r.p_zero == pytest.approx(4 / 5, abs=1e-12)
        and r.gamma == pytest.approx(math.log(4 / 9), abs=1e-10)
        and r.relative_bias == pytest.approx(-4 / 9, abs=1e-10)
    )
    point = bias_curve(0.75, [3], [5.0])[0]
    figure_ok = -0.6 <= point.relative_bias <= -0.4
    elapsed = time.monotonic() - start
    ok = exact_ok and figure_ok and elapsed < 1.0
    report(5, ok,
           f"p0 {r.p_zero:.12f}, gamma {r.gamma:.12f}, bias {r.relative_bias:.12f}; "
           f"precision-5 three-list curve point {point.relative_bias:.4f} "
           f"(need within [-0.6, -0.4]); {elapsed:.2f}s")
    assert exact_ok
    # The curve-point band is asserted as stated.  The closed form and a
    # direct Monte Carlo run with a consistent estimator both give -0.355 at
    # this point, so the stated band appears unattainable; see the decisions
    # ledger entry accompanying this build.
    assert figure_ok, (
        f"curve point {point.relative_bias:.4f} outside the stated band "
        "[-0.6, -0.4]; closed form and Monte Carlo agree on this value"
    )


def _lincoln_petersen(table: CountTable) -> float:
    counts = {pat.bits: n for pat, n in table.counts.items()}
    n10 = counts.get((1, 0), 0)
    n01 = counts.get((0, 1), 0)
    n11 = counts.get((1, 1), 0)
    if n11 == 0:
        raise ValueError("no overlap")
    return (n10 + n11) * (n01 + n11) / n11


@pytest.mark.acceptance
@pytest.mark.slow
def test_criterion_06_theorem_monte_carlo():
    start = time.monotonic()
    heterogeneous = heterogeneity_cell_probs(BetaHeterogeneity(1.0, 8.0, 2))
    rows = empirical_bias_check(heterogeneous, _lincoln_petersen, [10 ** 6],
                                replicates=100, seed=8881)
    r = rows[0]
    z_het = abs(r.mean_ratio - 5 / 9) / r.se_ratio
    independent = CellProbabilities.independent([0.2, 0.2])
    rows = empirical_bias_check(independent, _lincoln_petersen, [10 ** 6],
                                replicates=100, seed=8882)
    r2 = rows[0]
    z_ind = abs(r2.mean_ratio - 1.0) / r2.se_ratio
    elapsed = time.monotonic() - start
    ok = z_het <= 3.0 and z_ind <= 3.0 and elapsed < 120
    report(6, ok,
           f"heterogeneous ratio {r.mean_ratio:.5f} (target 5/9, z={z_het:.2f}); "
           f"independent ratio {r2.mean_ratio:.5f} (target 1, z={z_ind:.2f}); "
           f"{elapsed:.0f}s")
    assert z_het <= 3.0
    assert z_ind <= 3.0
    assert elapsed < 120


@pytest.mark.acceptance
def test_criterion_07_two_list_bias_sign():
    start = time.monotonic()
    rng = np.random.default_rng(271)
    worst = -np.inf
    for _ in range(1000):
        if rng.uniform() < 0.5:
            a, b = np.exp(rng.uniform(np.log(0.05), np.log(50.0), size=2))
            model = BetaHeterogeneity(float(a), float(b), 2)
        else:
            k = int(rng.integers(2, 6))
            atoms = rng.uniform(0.01, 0.99, size=k)
            while len(np.unique(atoms)) < k:
                atoms = rng.uniform(0.01, 0.99, size=k)
            weights = rng.dirichlet(np.ones(k))
            weights = weights / math.fsum(weights)
            model = DiscreteHeterogeneity(tuple(atoms), tuple(weights), 2)
        worst = max(worst, gamma_of(heterogeneity_cell_probs(model)))
    elapsed = time.monotonic() - start
    ok = worst < 0.0 and elapsed < 10.0
    report(7, ok, f"1000 two-list heterogeneity models, max gamma {worst:.3e}, "
                  f"{elapsed:.1f}s")
    assert worst < 0.0
    assert elapsed < 10.0


@pytest.mark.acceptance
def test_criterion_08_decomposable_enumeration():
    start = time.monotonic()
    counts = {}
    oracle = {}
    for n, expected in [(3, 8), (4, 61), (5, 822)]:
        graphs = enumerate_decomposable_graphs(n, include_complete=True)
        counts[n] = len(graphs)
        pairs = edge_pairs(n)
        oracle[n] = sum(
            1 for mask in range(1 << len(pairs))
            if not has_induced_long_cycle(
                n, [pairs[i] for i in range(len(pairs)) if mask >> i & 1])
        )
    elapsed = time.monotonic() - start
    ok = counts == {3: 8, 4: 61, 5: 822} and counts == oracle and elapsed < 10.0
    report(8, ok, f"counts {counts}, oracle {oracle}, {elapsed:.1f}s")
    assert counts == {3: 8, 4: 61, 5: 822}
    assert counts == oracle
    assert elapsed < 10.0


@pytest.mark.acceptance
def test_criterion_09_hyper_dirichlet_normalization():
    import itertools
    start = time.monotonic()
    prior = DgaPrior(kappa=0.5)
    pats = [(0, 0), (0, 1), (1, 0), (1, 1)]
    worst = 0.0
    for edges in ([], [(0, 1)]):
        graph = DecomposableGraph.from_edges(2, edges)
        total = 0.0
        for cells in itertools.product(range(4), repeat=4):
            if sum(cells) != 3:
                continue
            counts = {P(*pat): n for pat, n in zip(pats, cells)
                      if pat != (0, 0) and n > 0}
            table = CountTable(("a", "b"), counts)
            total += math.exp(log_marginal_full_table(table, cells[0], graph, prior))
        worst = max(worst, abs(total - 1.0))
    elapsed = time.monotonic() - start
    ok = worst < 1e-10 and elapsed < 1.0
    report(9, ok, f"worst |sum - 1| = {worst:.2e} over both 2-list graphs, "
                  f"{elapsed:.2f}s")
    assert worst < 1e-10
    assert elapsed < 1.0


@pytest.mark.acceptance
@pytest.mark.slow
def test_criterion_10_internal_consistency_bands():
    start = time.monotonic()
    budget = "full" if FULL_BUDGET else "reduced"
    estimators = default_estimators(budget)
    results = run_internal_consistency(load_all(), estimators, seed=2024)
    metrics = consistency_metrics(results)
    sparse = metrics["sparsemse"]
    dga = metrics["dga"]
    lcmcr = metrics["lcmcr"]
    checks = {
        "sparsemse mean": abs(sparse.mean - (-0.17)) <= 0.10,
        "sparsemse coverage": round(sparse.coverage, 1) in (0.8, 0.9, 1.0),
        "dga mean": abs(dga.mean - (-0.34)) <= 0.15,
        "lcmcr median": abs(lcmcr.median - (-0.50)) <= 0.20,
    }
    elapsed = time.monotonic() - start
    limit = 10 ** 9 if FULL_BUDGET else 900
    ok = all(checks.values()) and elapsed < limit
    report(10, ok,
           f"budget={budget}; sparsemse mean {sparse.mean:+.3f} cov "
           f"{sparse.coverage:.2f}; dga mean {dga.mean:+.3f}; lcmcr median "
           f"{lcmcr.median:+.3f}; {elapsed:.0f}s")
    for name, passed in checks.items():
        assert passed, f"{name} outside band"
    assert elapsed < limit


@pytest.mark.acceptance
@pytest.mark.slow
def test_criterion_11_lcmcr_convergence_pathology():
    start = time.monotonic()
    ned = load_dataset("netherlands")
    config = LcmcrConfig(iterations=100_000, keep=100, chains=20, seed=1789)
    _, samples = multi_chain_posterior(ned.table, config)
    diag = convergence_diagnostics(samples)
    rhat = diag["p0"].rhat
    p0 = samples.p0.ravel()
    kde = gaussian_kde(p0)
    grid = np.linspace(p0.min(), p0.max(), 512)
    density = kde(grid)
    peaks = argrelextrema(density, np.greater, order=8)[0]
    peaks = [i for i in peaks if density[i] >= 0.05 * density.max()]
    bimodal = False
    dip = math.nan
    if len(peaks) >= 2:
        top_two = sorted(sorted(peaks, key=lambda i: -density[i])[:2])
        valley = density[top_two[0]:top_two[1] + 1].min()
        smaller_peak = min(density[top_two[0]], density[top_two[1]])
        dip = 1.0 - valley / smaller_peak
        bimodal = dip > 0.5
    elapsed = time.monotonic() - start
    ok = rhat is not None and rhat > 1.3 and bimodal and elapsed < 1800
    report(11, ok,
           f"rhat(p0) {rhat:.2f} (need > 1.3); modes {len(peaks)}, density dip "
           f"{dip:.0%} (need > 50%); {elapsed:.0f}s")
    assert rhat is not None and rhat > 1.3
    assert bimodal
    assert elapsed < 1800


@pytest.mark.acceptance
@pytest.mark.slow
def test_criterion_12_trajectory_coincidence():
    start = time.monotonic()
    estimators = [
        IndependenceEstimator(bootstrap=100),
        SparseMseEstimator(bootstrap=100),
        DgaEstimator(n_max_factor=10),
        LcmcrEstimator(iterations=4000, keep=50, chains=4),
    ]
    failures = []
    for d in load_all():
        n = d.table.n_obs
        for estimator in estimators:
            full = estimator.run(d.table, 17)
            series = estimate_trajectory(d, estimator, checkpoints=[n], seed=17)
            got = series.points[0].estimate
            if got is None or (got.point, got.lower, got.upper) != (
                    full.point, full.lower, full.upper):
                failures.append((d.name, estimator.name))
    elapsed = time.monotonic() - start
    ok = not failures and elapsed < 600
    report(12, ok, f"20 estimator/dataset pairs, mismatches {failures or 'none'}, "
                   f"{elapsed:.0f}s")
    assert not failures
    assert elapsed < 600
