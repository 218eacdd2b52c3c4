import itertools
import math

import numpy as np
import pytest

from msekit.bootstrap import BootstrapError, bca_endpoints, bca_interval
from msekit.catalog import load_all, load_dataset
from msekit.data import CountTable, DataError, InclusionPattern
from msekit.loglinear import (
    FitError,
    InestimableModelError,
    LogLinearModel,
    estimate_independence,
    estimate_sparsemse,
    fit_loglinear,
    independence_point_estimate,
    stepwise_select,
)

P = InclusionPattern.of


def two_list_table(n10, n01, n11):
    return CountTable(("a", "b"), {P(1, 0): n10, P(0, 1): n01, P(1, 1): n11})


class TestModel:
    def test_full_interaction_excluded(self):
        with pytest.raises(DataError, match="all-lists"):
            LogLinearModel(2, frozenset({frozenset({0, 1})}))
        with pytest.raises(DataError, match="all-lists"):
            LogLinearModel(3, frozenset({frozenset({0, 1, 2})}))

    def test_term_size_and_range(self):
        with pytest.raises(DataError):
            LogLinearModel(3, frozenset({frozenset({0})}))
        with pytest.raises(DataError):
            LogLinearModel(3, frozenset({frozenset({0, 7})}))

    def test_all_two_way(self):
        m = LogLinearModel.all_two_way(4)
        assert len(m.terms) == 6


class TestFit:
    def test_lincoln_petersen_closed_form(self):
        rng = np.random.default_rng(271828)
        for _ in range(50):
            n10, n01, n11 = rng.integers(1, 500, size=3)
            fit = fit_loglinear(two_list_table(int(n10), int(n01), int(n11)),
                                LogLinearModel.independence(2))
            n1, n2, m = n10 + n11, n01 + n11, n11
            assert fit.n_hat == pytest.approx(n1 * n2 / m, rel=1e-6)

    def test_simple_example(self):
        fit = fit_loglinear(two_list_table(75, 25, 25), LogLinearModel.independence(2))
        assert fit.n_hat == pytest.approx(200.0, rel=1e-9)

    def test_symmetric_table_symmetric_effects(self):
        fit = fit_loglinear(two_list_table(11, 11, 11), LogLinearModel.independence(2))
        assert fit.coefficients["a"] == pytest.approx(fit.coefficients["b"], abs=1e-9)

    def test_uk_boundary_term(self):
        uk = load_dataset("uk")
        la = uk.table.list_names.index("LA")
        gp = uk.table.list_names.index("GP")
        fit = fit_loglinear(uk.table, LogLinearModel(5, frozenset({frozenset({la, gp})})))
        assert fit.coefficients[frozenset({"LA", "GP"})] == float("-inf")
        for pat, mu in fit.fitted_counts.items():
            if pat.bits[la] == 1 and pat.bits[gp] == 1:
                assert mu == 0.0

    def test_fitted_total_matches_observed(self):
        for d in load_all():
            fit = fit_loglinear(d.table, LogLinearModel.independence(d.table.n_lists))
            assert sum(fit.fitted_counts.values()) == pytest.approx(d.table.n_obs, abs=1e-6)

    def test_label_invariance(self):
        uk = load_dataset("uk")
        base = fit_loglinear(uk.table, LogLinearModel.independence(5))
        order = [3, 0, 4, 1, 2]
        permuted = uk.table.permute_lists(order)
        fit = fit_loglinear(permuted, LogLinearModel.independence(5))
        assert fit.n_hat == pytest.approx(base.n_hat, rel=1e-9)
        for name in uk.table.list_names:
            assert fit.coefficients[name] == pytest.approx(base.coefficients[name], abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError, match="lists"):
            fit_loglinear(two_list_table(5, 5, 5), LogLinearModel.independence(3))

    def test_all_mass_on_one_list_inestimable(self):
        t = CountTable(("a", "b"), {P(1, 0): 50})
        with pytest.raises(InestimableModelError):
            fit_loglinear(t, LogLinearModel.independence(2))

    def test_zero_overlap_diverges(self):
        t = CountTable(("a", "b"), {P(1, 0): 60, P(0, 1): 40})
        with pytest.raises(FitError):
            fit_loglinear(t, LogLinearModel.independence(2))

    def test_n0_hat_is_intercept_cell(self):
        fit = fit_loglinear(two_list_table(75, 25, 25), LogLinearModel.independence(2))
        assert fit.n0_hat == pytest.approx(math.exp(fit.coefficients["intercept"]), rel=1e-12)


class TestStepwise:
    def test_threshold_zero_returns_independence(self):
        uk = load_dataset("uk")
        assert stepwise_select(uk.table, 0.0).terms == frozenset()

    def test_threshold_one_adds_all_estimable_pairs(self):
        uk = load_dataset("uk")
        model = stepwise_select(uk.table, 1.0)
        assert len(model.terms) == 10  # every pair, boundary included

    def test_two_lists_no_candidates(self):
        model = stepwise_select(two_list_table(75, 25, 25), 1.0)
        assert model.terms == frozenset()

    def test_threshold_domain(self):
        with pytest.raises(DataError):
            stepwise_select(two_list_table(5, 5, 5), 1.5)

    @pytest.mark.slow
    def test_monotone_in_threshold_on_catalog(self):
        grid = np.linspace(0.0, 1.0, 20)
        for d in load_all():
            previous = None
            for tau in grid:
                terms = stepwise_select(d.table, float(tau)).terms
                if previous is not None:
                    assert previous <= terms, (d.name, tau)
                previous = terms


class TestEstimators:
    def test_independence_point(self):
        est = estimate_independence(two_list_table(75, 25, 25), bootstrap=80, seed=4)
        assert est.point == pytest.approx(200.0, rel=1e-6)
        assert est.lower <= est.point <= est.upper

    def test_independence_inestimable(self):
        t = CountTable(("a", "b"), {P(1, 0): 50})
        with pytest.raises(FitError):
            estimate_independence(t, bootstrap=80, seed=0)

    def test_uk_independence_band(self):
        # run-once golden plausibility band for the baseline estimator
        point = independence_point_estimate(load_dataset("uk").table)
        assert 2744 < point < 10 * 2744

    def test_two_list_sparsemse_equals_independence(self):
        t = two_list_table(75, 25, 25)
        a = estimate_independence(t, bootstrap=100, seed=11)
        b = estimate_sparsemse(t, threshold=0.5, bootstrap=100, seed=11)
        assert b.point == pytest.approx(a.point, rel=1e-12)
        assert (b.lower, b.upper) == (pytest.approx(a.lower), pytest.approx(a.upper))

    def test_estimate_carries_fingerprint(self):
        est = estimate_independence(two_list_table(75, 25, 25), bootstrap=80, seed=4)
        assert est.estimator == "independence"
        assert len(est.fingerprint) == 12


class TestBca:
    def test_minimum_replicates(self):
        with pytest.raises(DataError, match="50"):
            bca_interval(two_list_table(5, 5, 5), lambda t: 1.0, n_replicates=10)

    def test_constant_estimator(self):
        lo, hi = bca_interval(two_list_table(30, 30, 30), lambda t: 7.5,
                              n_replicates=60, seed=1)
        assert (lo, hi) == (7.5, 7.5)

    def test_symmetric_replicates_reduce_to_percentile(self):
        rng = np.random.default_rng(8)
        half = rng.normal(size=4000)
        stats = np.concatenate([half, -half])  # exactly symmetric about 0
        lo, hi = bca_endpoints(stats, point=0.0, acceleration=0.0, level=0.95)
        assert lo == pytest.approx(np.quantile(stats, 0.025), abs=1e-9)
        assert hi == pytest.approx(np.quantile(stats, 0.975), abs=1e-9)

    def test_deterministic_given_seed(self):
        t = two_list_table(75, 25, 25)
        a = bca_interval(t, independence_point_estimate, n_replicates=100, seed=3)
        b = bca_interval(t, independence_point_estimate, n_replicates=100, seed=3)
        assert a == b

    def test_failure_rate_guard(self):
        calls = itertools.count()
        def flaky(table):
            if next(calls) % 2 == 0:  # first call is the point estimate
                return float(table.n_obs)
            raise RuntimeError("boom")
        with pytest.raises(BootstrapError, match="failed"):
            bca_interval(two_list_table(40, 40, 40), flaky, n_replicates=100, seed=0)

    def test_identity_on_degenerate_table(self):
        # resampling a single-pattern table is a no-op, so any statistic of
        # the table is constant across replicates
        t = CountTable(("a", "b"), {P(1, 1): 25})
        lo, hi = bca_interval(t, lambda x: float(x.n_obs), n_replicates=60, seed=2)
        assert lo == hi == 25.0
