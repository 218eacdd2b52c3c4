"""Poisson log-linear models for list-overlap count tables.

Models contain an intercept and all main effects; interaction terms are
subsets of lists of size >= 2.  The highest-order (all-lists) interaction is
structurally excluded: it is exactly the term whose absence lets the fitted
intercept extrapolate to the unobserved cell, giving the population estimate
N_hat = n_obs + exp(mu_hat).

Fitting maximizes the Poisson likelihood over the 2^L - 1 observed cells by
Newton/IRLS steps.  Non-overlapping list pairs are handled by extended
maximum likelihood: a term whose observed margin is zero gets coefficient
-inf, the cells it covers get fitted count zero, and the remaining
coefficients are optimized on the reduced cell set.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.stats import chi2

from .bootstrap import bca_interval
from .data import CountTable, DataError, all_patterns
from .estimate import Estimate, config_fingerprint


class FitError(RuntimeError):
    """Log-linear fit failed (divergence or non-convergence)."""


class InestimableModelError(FitError):
    """Model not estimable on this table (rank-deficient after reductions)."""


CoefficientKey = Union[str, frozenset]


@dataclass(frozen=True)
class LogLinearModel:
    """Interaction structure: which list subsets of size >= 2 carry terms."""

    n_lists: int
    terms: frozenset = frozenset()

    def __post_init__(self):
        if self.n_lists < 2:
            raise DataError("need at least two lists")
        terms = frozenset(frozenset(t) for t in self.terms)
        for t in terms:
            if not (2 <= len(t) < self.n_lists):
                raise DataError(
                    f"term {set(t)} invalid: size must be in [2, {self.n_lists - 1}] "
                    "(the all-lists interaction is excluded)"
                )
            if any(not (0 <= j < self.n_lists) for j in t):
                raise DataError(f"term {set(t)} has out-of-range list index")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def independence(cls, n_lists: int) -> "LogLinearModel":
        return cls(n_lists, frozenset())

    @classmethod
    def all_two_way(cls, n_lists: int) -> "LogLinearModel":
        """Every pair term; with two lists the only pair is the excluded
        all-lists interaction, so this degrades to independence."""
        if n_lists == 2:
            return cls.independence(n_lists)
        pairs = frozenset(frozenset(p) for p in itertools.combinations(range(n_lists), 2))
        return cls(n_lists, pairs)

    def with_term(self, term) -> "LogLinearModel":
        return LogLinearModel(self.n_lists, self.terms | {frozenset(term)})

    def sorted_terms(self) -> list[tuple[int, ...]]:
        return sorted(tuple(sorted(t)) for t in self.terms)


@dataclass(frozen=True)
class FitResult:
    model: LogLinearModel
    coefficients: dict[CoefficientKey, float]
    fitted_counts: dict
    deviance: float
    n0_hat: float
    n_obs: int
    n_iter: int

    @property
    def n_hat(self) -> float:
        return self.n_obs + self.n0_hat


def _design_matrix(X: np.ndarray, model: LogLinearModel, list_names) -> tuple[np.ndarray, list]:
    cols = [np.ones(X.shape[0])]
    keys: list[CoefficientKey] = ["intercept"]
    for j in range(model.n_lists):
        cols.append(X[:, j].astype(float))
        keys.append(list_names[j])
    for t in model.sorted_terms():
        cols.append(np.prod(X[:, list(t)], axis=1).astype(float))
        keys.append(frozenset(list_names[j] for j in t))
    return np.column_stack(cols), keys


def _poisson_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(y > 0, y * np.log(np.where(y > 0, y / mu, 1.0)), 0.0)
    return float(2.0 * np.sum(term - (y - mu)))


def fit_loglinear(
    table: CountTable,
    model: LogLinearModel,
    score_tol: float = 1e-8,
    deviance_tol: float = 1e-10,
    max_iter: int = 10_000,
) -> FitResult:
    """Maximum likelihood fit of a log-linear model to an observed table."""
    if model.n_lists != table.n_lists:
        raise DataError(f"model has {model.n_lists} lists, table has {table.n_lists}")
    X, y = table.dense()
    n_obs = table.n_obs
    if n_obs == 0:
        raise InestimableModelError("empty table")
    D, keys = _design_matrix(X, model, table.list_names)

    # Extended MLE: any column with zero sufficient statistic sits at the
    # boundary.  Its coefficient is -inf and the cells it covers are fitted
    # at exactly zero; remove them and refit on what is left.
    suff = D.T @ y
    boundary = [k for k in range(1, D.shape[1]) if suff[k] == 0]
    keep_rows = np.ones(D.shape[0], dtype=bool)
    for k in boundary:
        keep_rows &= D[:, k] == 0
    keep_cols = [k for k in range(D.shape[1]) if k not in boundary]
    Dr = D[np.ix_(keep_rows, keep_cols)]
    yr = y[keep_rows]

    if Dr.shape[0] < Dr.shape[1] or np.linalg.matrix_rank(Dr) < Dr.shape[1]:
        raise InestimableModelError(
            "model not estimable: rank-deficient design after boundary reductions"
        )

    beta = np.zeros(Dr.shape[1])
    beta[0] = np.log(n_obs / (2 ** model.n_lists))
    eta = Dr @ beta
    mu = np.exp(eta)
    dev = _poisson_deviance(yr, mu)
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        score = Dr.T @ (yr - mu)
        if np.max(np.abs(score)) < score_tol:
            converged = True
            break
        H = Dr.T @ (Dr * mu[:, None])
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError:
            raise InestimableModelError("singular information matrix") from None
        # step-halving keeps the deviance monotone on hard tables
        new_dev = np.inf
        for _ in range(30):
            cand = beta + step
            eta = np.clip(Dr @ cand, -500.0, 500.0)
            mu_cand = np.exp(eta)
            new_dev = _poisson_deviance(yr, mu_cand)
            if np.isfinite(new_dev) and new_dev <= dev + 1e-12:
                break
            step = step / 2.0
        beta = beta + step
        mu = np.exp(np.clip(Dr @ beta, -500.0, 500.0))
        new_dev = _poisson_deviance(yr, mu)
        if beta[0] > np.log(1e8 * n_obs):
            raise FitError("fit diverged: unobserved-cell estimate unbounded")
        if abs(dev - new_dev) < deviance_tol * (abs(new_dev) + deviance_tol):
            dev = new_dev
            converged = True
            break
        dev = new_dev
    if not converged:
        raise FitError(f"no convergence after {max_iter} iterations")

    coefficients: dict[CoefficientKey, float] = {}
    j = 0
    for k, key in enumerate(keys):
        if k in boundary:
            coefficients[key] = float("-inf")
        else:
            coefficients[key] = float(beta[j])
            j += 1
    fitted = np.zeros(len(y))
    fitted[keep_rows] = mu
    fitted_counts = {pat: float(fitted[i]) for i, pat in enumerate(all_patterns(table.n_lists))}
    n0_hat = float(np.exp(coefficients["intercept"]))
    return FitResult(model=model, coefficients=coefficients, fitted_counts=fitted_counts,
                     deviance=float(_poisson_deviance(yr, mu)), n0_hat=n0_hat,
                     n_obs=n_obs, n_iter=n_iter)


def independence_point_estimate(table: CountTable) -> float:
    return fit_loglinear(table, LogLinearModel.independence(table.n_lists)).n_hat


_INDEPENDENCE_CONFIG = {
    "estimator": "independence",
    "fit": "poisson-irls",
    "interval": "bca-multinomial",
}


def estimate_independence(
    table: CountTable,
    level: float = 0.95,
    bootstrap: int = 1000,
    seed: int = 0,
) -> Estimate:
    """Baseline estimator: log-linear model with no interaction terms."""
    point = independence_point_estimate(table)
    lower, upper = bca_interval(table, independence_point_estimate,
                                n_replicates=bootstrap, level=level, seed=seed)
    config = dict(_INDEPENDENCE_CONFIG, bootstrap=bootstrap, level=level)
    return Estimate(estimator="independence", point=point,
                    lower=min(lower, point), upper=max(upper, point),
                    level=level, seed=seed, fingerprint=config_fingerprint(config),
                    config=config)


def stepwise_select(table: CountTable, threshold: float) -> LogLinearModel:
    """Forward selection of two-way terms by likelihood-ratio p-value.

    Starting from independence, the absent pair with the smallest chi-square
    (1 df) p-value below the threshold joins the model; ties break on the
    lexicographically smallest pair.  Terms above two-way are never
    considered.  Candidates that fail to fit are skipped.
    """
    if not (0.0 <= threshold <= 1.0):
        raise DataError("threshold must lie in [0, 1]")
    L = table.n_lists
    model = LogLinearModel.independence(L)
    if L == 2:
        return model  # the only candidate pair is the excluded all-lists term
    current = fit_loglinear(table, model)
    remaining = sorted(tuple(p) for p in itertools.combinations(range(L), 2))
    while remaining:
        best: Optional[tuple[float, tuple[int, int]]] = None
        fits: dict[tuple[int, int], FitResult] = {}
        for pair in remaining:
            try:
                cand = fit_loglinear(table, model.with_term(pair))
            except FitError as err:
                warnings.warn(f"candidate term {pair} skipped: {err}")
                continue
            lrt = current.deviance - cand.deviance
            if not np.isfinite(lrt):
                warnings.warn(f"candidate term {pair} skipped: degenerate test")
                continue
            p_value = float(chi2.sf(max(lrt, 0.0), df=1))
            fits[pair] = cand
            if best is None or (p_value, pair) < best:
                best = (p_value, pair)
        if best is None or best[0] >= threshold:
            break
        _, pair = best
        model = model.with_term(pair)
        current = fits[pair]
        remaining.remove(pair)
    return model


def sparsemse_point_estimate(table: CountTable, threshold: float) -> float:
    return fit_loglinear(table, stepwise_select(table, threshold)).n_hat


def estimate_sparsemse(
    table: CountTable,
    threshold: float = 0.02,
    level: float = 0.95,
    bootstrap: int = 1000,
    seed: int = 0,
) -> Estimate:
    """Stepwise two-way log-linear estimator with a model-selection-aware
    bootstrap interval: selection is re-run inside every replicate."""
    point = sparsemse_point_estimate(table, threshold)
    lower, upper = bca_interval(
        table, lambda t: sparsemse_point_estimate(t, threshold),
        n_replicates=bootstrap, level=level, seed=seed,
    )
    config = {
        "estimator": "sparsemse",
        "threshold": threshold,
        "bootstrap": bootstrap,
        "level": level,
        "selection": "forward-lrt-chisq1-lex-ties",
        "fit": "poisson-irls-extended",
    }
    return Estimate(estimator="sparsemse", point=point,
                    lower=min(lower, point), upper=max(upper, point),
                    level=level, seed=seed, fingerprint=config_fingerprint(config),
                    config=config)
