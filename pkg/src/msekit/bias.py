"""Asymptotic bias of population-size estimators under a misspecified
no-highest-order-interaction assumption.

The highest-order log-linear interaction of a full cell distribution is

    gamma = sum over x in {0,1}^L of (-1)^(|x|+1) * log p_x.

Estimators that are consistent when gamma = 0 acquire a relative asymptotic
bias of p_0 * (exp(gamma) - 1) when it is not.  Individual-heterogeneity
models (each individual has its own latent list-appearance probability)
generically violate gamma = 0; with two lists the induced bias is always
negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import betaln, gammaln

from .data import CellProbabilities, CountTable, DataError, all_patterns, simulate_counts


@dataclass(frozen=True)
class BetaHeterogeneity:
    """Per-individual list-appearance probability drawn from Beta(a, b)."""

    a: float
    b: float
    n_lists: int

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DataError("Beta parameters must be positive")
        if self.n_lists < 1:
            raise DataError("need at least one list")


@dataclass(frozen=True)
class DiscreteHeterogeneity:
    """Per-individual list-appearance probability drawn from a finite mixture."""

    atoms: tuple[float, ...]
    weights: tuple[float, ...]
    n_lists: int

    def __post_init__(self):
        if len(self.atoms) != len(self.weights) or not self.atoms:
            raise DataError("atoms and weights must be non-empty and equal length")
        if any(not (0.0 < lam <= 1.0) for lam in self.atoms):
            raise DataError("atoms must lie in (0, 1]")
        if any(w < 0 for w in self.weights):
            raise DataError("weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise DataError("weights must sum to 1 within 1e-12")
        if self.n_lists < 1:
            raise DataError("need at least one list")


HeterogeneityModel = BetaHeterogeneity | DiscreteHeterogeneity


@dataclass(frozen=True)
class BiasReport:
    gamma: float
    p_zero: float
    relative_bias: float


def gamma_of(p: CellProbabilities) -> float:
    """Highest-order interaction of a full cell distribution, accumulated
    with compensated summation.  Requires every cell probability positive."""
    terms = []
    for pat in all_patterns(p.n_lists, include_zero=True):
        v = p.probs[pat]
        if v <= 0:
            raise DataError(f"cell {pat} has zero probability; gamma undefined")
        sign = 1.0 if pat.order % 2 == 1 else -1.0
        terms.append(sign * math.log(v))
    return math.fsum(terms)


def asymptotic_relative_bias(p_zero: float, gamma: float) -> float:
    """Limit of (N_hat - N) / N for estimators consistent under gamma = 0."""
    if not (0.0 <= p_zero < 1.0):
        raise DataError("p_zero must lie in [0, 1)")
    return p_zero * (math.exp(gamma) - 1.0)


def observed_inflation_factor(p_zero: float, gamma: float) -> float:
    """First-order multiplier: N_hat ~ (1 + p0/(1-p0) * exp(gamma)) * n_obs."""
    if not (0.0 <= p_zero < 1.0):
        raise DataError("p_zero must lie in [0, 1)")
    return 1.0 + p_zero / (1.0 - p_zero) * math.exp(gamma)


def heterogeneity_cell_probs(h: HeterogeneityModel) -> CellProbabilities:
    """Marginal cell distribution p_x = E[lambda^|x| (1-lambda)^(L-|x|)]."""
    L = h.n_lists
    if isinstance(h, BetaHeterogeneity):
        # E[lam^k (1-lam)^(L-k)] = B(a+k, b+L-k) / B(a, b), exact
        logB0 = betaln(h.a, h.b)
        by_order = [math.exp(betaln(h.a + k, h.b + L - k) - logB0) for k in range(L + 1)]
    else:
        atoms = np.asarray(h.atoms, dtype=np.float64)
        weights = np.asarray(h.weights, dtype=np.float64)
        by_order = [float(np.sum(weights * atoms ** k * (1.0 - atoms) ** (L - k)))
                    for k in range(L + 1)]
    probs = {pat: by_order[pat.order] for pat in all_patterns(L, include_zero=True)}
    total = math.fsum(probs.values())
    probs = {pat: v / total for pat, v in probs.items()}
    return CellProbabilities(L, probs)


def beta_bias_summary(a: float, b: float, n_lists: int) -> BiasReport:
    """Exact interaction, unobserved-cell probability, and relative bias for
    the Beta heterogeneity model."""
    if not (a > 0 and b > 0):
        raise DataError("Beta parameters must be positive")
    if n_lists < 2:
        raise DataError("need at least two lists")
    L = n_lists
    p_zero = math.exp(gammaln(a + b) + gammaln(b + L) - gammaln(b) - gammaln(a + b + L))
    terms = []
    for k in range(L + 1):
        sign = -1.0 if k % 2 == 0 else 1.0
        terms.append(sign * math.comb(L, k) * (gammaln(a + k) + gammaln(b + L - k)))
    gamma = math.fsum(terms)
    return BiasReport(gamma=gamma, p_zero=p_zero,
                      relative_bias=asymptotic_relative_bias(p_zero, gamma))


def beta_p_zero_approximation(a: float, b: float, n_lists: int) -> float:
    """Large-precision approximation (b / (a+b))^L to the exact p_zero."""
    return (b / (a + b)) ** n_lists


@dataclass(frozen=True)
class BiasCurvePoint:
    n_lists: int
    precision: float
    a: float
    b: float
    gamma: float
    p_zero: float
    relative_bias: float


def bias_curve(
    p_zero_target: float,
    list_counts: Sequence[int],
    precision_grid: Sequence[float],
) -> list[BiasCurvePoint]:
    """Relative bias of the Beta model along a precision (a+b) grid, holding
    the approximate unobserved probability (b/(a+b))^L at a fixed target.

    Grid points where the implied a would be nonpositive are skipped.
    """
    if not (0.0 < p_zero_target < 1.0):
        raise DataError("p_zero_target must lie in (0, 1)")
    rows = []
    for L in list_counts:
        frac = p_zero_target ** (1.0 / L)
        for s in precision_grid:
            b = s * frac
            a = s - b
            if a <= 0:
                continue
            report = beta_bias_summary(a, b, L)
            rows.append(BiasCurvePoint(n_lists=L, precision=float(s), a=a, b=b,
                                       gamma=report.gamma, p_zero=report.p_zero,
                                       relative_bias=report.relative_bias))
    return rows


@dataclass(frozen=True)
class ConvergencePoint:
    population_size: int
    mean_ratio: float
    se_ratio: float
    n_failed: int


def empirical_bias_check(
    p: CellProbabilities,
    estimator: Callable[[CountTable], float],
    population_sizes: Iterable[int],
    replicates: int,
    seed: int,
    max_failure_rate: float = 0.2,
) -> list[ConvergencePoint]:
    """Monte Carlo check of the asymptotic bias: simulate data at each
    population size, apply a point estimator, and report mean and standard
    error of the ratio estimate / truth."""
    rows = []
    for i, N in enumerate(population_sizes):
        ratios = []
        failed = 0
        for r in range(replicates):
            table = simulate_counts(p, N, seed=np.random.SeedSequence((seed, i, r)))
            try:
                ratios.append(estimator(table) / N)
            except Exception:
                failed += 1
        if failed > max_failure_rate * replicates:
            raise DataError(f"estimator failed on {failed}/{replicates} replicates at N={N}")
        arr = np.asarray(ratios)
        se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else float("nan")
        rows.append(ConvergencePoint(population_size=int(N), mean_ratio=float(arr.mean()),
                                     se_ratio=se, n_failed=failed))
    return rows
