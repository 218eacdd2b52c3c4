"""Bias-corrected and accelerated (BCa) bootstrap intervals for count-table
statistics.

Resampling is nonparametric: n_obs individuals are redrawn from the observed
pattern frequencies.  The bias correction comes from the fraction of
replicate statistics strictly below the point estimate; the acceleration
from a delete-one-individual jackknife, grouped by pattern since individuals
sharing a pattern are exchangeable.
"""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np
from scipy.stats import norm

from .data import CountTable, DataError


class BootstrapError(RuntimeError):
    """Bootstrap interval could not be formed."""


def _resample(table: CountTable, rng: np.random.Generator) -> CountTable:
    items = table.items_sorted()
    probs = np.array([n for _, n in items], dtype=np.float64)
    probs /= probs.sum()
    draws = rng.multinomial(table.n_obs, probs)
    counts = {pat: int(c) for (pat, _), c in zip(items, draws) if c > 0}
    return CountTable(table.list_names, counts)


def _jackknife_acceleration(table: CountTable, estimator) -> float:
    values = []
    weights = []
    for pat, n in table.items_sorted():
        counts = dict(table.counts)
        if n == 1:
            del counts[pat]
        else:
            counts[pat] = n - 1
        try:
            values.append(estimator(CountTable(table.list_names, counts)))
            weights.append(n)
        except Exception:
            return 0.0  # fall back to no acceleration on unstable deletions
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    mean = float(np.sum(weights * values) / np.sum(weights))
    d = mean - values
    denom = float(np.sum(weights * d ** 2)) ** 1.5
    if denom == 0.0:
        return 0.0
    return float(np.sum(weights * d ** 3) / (6.0 * denom))


def bca_interval(
    table: CountTable,
    estimator: Callable[[CountTable], float],
    n_replicates: int,
    level: float = 0.95,
    seed: int = 0,
    max_failure_rate: float = 0.2,
) -> tuple[float, float]:
    """BCa interval for estimator(table), deterministic given the seed.

    Replicate b draws its generator from the pair (seed, b), so replicates
    can be evaluated in any order or in parallel with identical results.
    Replicates where the estimator fails are dropped; more than
    `max_failure_rate` failures is an error.
    """
    if n_replicates < 50:
        raise DataError(f"need at least 50 replicates, got {n_replicates}")
    if not (0.0 < level < 1.0):
        raise DataError("level must be in (0, 1)")
    point = estimator(table)
    stats = []
    failed = 0
    for b in range(n_replicates):
        rng = np.random.default_rng(np.random.SeedSequence((seed, b)))
        try:
            stats.append(estimator(_resample(table, rng)))
        except Exception:
            failed += 1
    if failed > max_failure_rate * n_replicates:
        raise BootstrapError(
            f"estimator failed on {failed}/{n_replicates} bootstrap replicates"
        )
    if failed:
        warnings.warn(f"dropped {failed}/{n_replicates} failed bootstrap replicates")
    stats = np.asarray(stats, dtype=np.float64)
    a = _jackknife_acceleration(table, estimator)
    return bca_endpoints(stats, point, a, level)


def bca_endpoints(
    stats: np.ndarray, point: float, acceleration: float, level: float
) -> tuple[float, float]:
    """Adjusted-percentile endpoints from a replicate sample.

    The bias correction is the normal quantile of the fraction of replicates
    strictly below the point estimate; with no bias correction and no
    acceleration this reduces to the plain percentile interval.
    """
    stats = np.asarray(stats, dtype=np.float64)
    frac_below = float(np.mean(stats < point))
    if frac_below <= 0.0:
        v = float(np.min(stats))
        return (v, v)
    if frac_below >= 1.0:
        v = float(np.max(stats))
        return (v, v)
    z0 = norm.ppf(frac_below)
    alpha = 1.0 - level
    quantiles = []
    for z_alpha in (norm.ppf(alpha / 2.0), norm.ppf(1.0 - alpha / 2.0)):
        adj = z0 + (z0 + z_alpha) / (1.0 - acceleration * (z0 + z_alpha))
        quantiles.append(float(np.clip(norm.cdf(adj), 0.0, 1.0)))
    lower = float(np.quantile(stats, quantiles[0]))
    upper = float(np.quantile(stats, quantiles[1]))
    return (min(lower, upper), max(lower, upper))
