"""Bayesian model averaging over decomposable graphical models with
conjugate Dirichlet clique priors.

For a decomposable graph, the marginal likelihood of a completed table
(observed cells plus a candidate unobserved count in the zero cell) is
available in closed form: a multinomial coefficient times a ratio of
Dirichlet-multinomial clique factors over separator factors.  Averaging over
all chordal graphs with a scale-free 1/N prior on the population size gives
a discrete posterior for the unobserved count on a bounded grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .data import CountTable, DataError
from .estimate import Estimate, config_fingerprint
from .graphs import DecomposableGraph, enumerate_decomposable_graphs


@dataclass(frozen=True)
class DgaPrior:
    """Prior configuration for graphical model averaging.

    Cell prior counts follow an independence profile with per-list inclusion
    probability ``kappa``: the count for cell x is kappa^|x| (1-kappa)^(L-|x|),
    summing to one over the full table.  ``edge_beta`` is the independent
    edge-inclusion probability of the graph prior, restricted to the chordal
    graphs under consideration.  The population grid is bounded by ``n_max``.
    """

    kappa: float = 0.5
    edge_beta: float = 0.5
    include_complete: bool = False
    n_max: Optional[int] = None  # defaults to 100 * n_obs at run time

    def __post_init__(self):
        if not (0.0 < self.kappa < 1.0):
            raise DataError("kappa must lie in (0, 1)")
        if not (0.0 < self.edge_beta < 1.0):
            raise DataError("edge_beta must lie in (0, 1)")


@dataclass(frozen=True)
class PosteriorGrid:
    """Discrete posterior over the unobserved count."""

    n0_values: np.ndarray
    log_weights: np.ndarray      # unnormalized
    probabilities: np.ndarray    # normalized to sum 1

    def __post_init__(self):
        total = float(self.probabilities.sum())
        if abs(total - 1.0) > 1e-10:
            raise DataError(f"posterior probabilities sum to {total}, not 1")

    @property
    def tail_mass(self) -> float:
        return float(self.probabilities[-1])

    def quantile(self, q: float, n_obs: int) -> int:
        """Smallest population size with cumulative probability >= q."""
        cdf = np.cumsum(self.probabilities)
        idx = int(np.searchsorted(cdf, q, side="left"))
        idx = min(idx, len(self.n0_values) - 1)
        return int(n_obs + self.n0_values[idx])


def _margin_cells(X: np.ndarray, y: np.ndarray, margin: tuple[int, ...]) -> dict:
    """Aggregate observed counts by their restriction to a margin."""
    cells: dict[tuple[int, ...], float] = {}
    for row, n in zip(X, y):
        if n == 0:
            continue
        key = tuple(int(row[j]) for j in margin)
        cells[key] = cells.get(key, 0.0) + float(n)
    return cells


def _margin_terms(
    table: CountTable, kappa: float, n0_grid: np.ndarray
) -> tuple[dict, np.ndarray]:
    """Per-margin pieces of the clique/separator factors.

    For margin A the factor is
        log Gamma(alpha_plus) - log Gamma(alpha_plus + N)
        + sum over cells c of [log Gamma(alpha_c + m_c) - log Gamma(alpha_c)]
    where alpha_plus = 1 by construction and the zero cell of A absorbs the
    candidate unobserved count.  Returns, for every vertex subset, the pair
    (constant part, grid-dependent zero-cell array), plus gammaln(N + 1).
    """
    X, y = table.dense()
    L = table.n_lists
    n_obs = table.n_obs
    N = n_obs + n0_grid
    log_gamma_n1 = gammaln(N + 1.0)
    terms: dict[tuple[int, ...], tuple[float, np.ndarray]] = {}
    from itertools import combinations

    for size in range(0, L + 1):
        for margin in combinations(range(L), size):
            cells = _margin_cells(X, y, margin)
            zero = (0,) * size
            zero_count = cells.pop(zero, 0.0)
            const = 0.0
            for cell, m in cells.items():
                alpha = kappa ** sum(cell) * (1.0 - kappa) ** (size - sum(cell))
                const += gammaln(alpha + m) - gammaln(alpha)
            alpha0 = (1.0 - kappa) ** size
            grid_part = gammaln(alpha0 + zero_count + n0_grid) - gammaln(alpha0)
            terms[margin] = (const, grid_part)
    return terms, log_gamma_n1


def _graph_log_marginal_grid(
    graph: DecomposableGraph,
    margin_terms: dict,
    log_gamma_n1: np.ndarray,
    log_gamma_cells: float,
    n0_grid: np.ndarray,
) -> np.ndarray:
    total = np.zeros_like(log_gamma_n1)
    n_components = len(graph.cliques) - len(graph.separators)
    total += (1 - n_components) * log_gamma_n1
    total += log_gamma_cells
    total -= gammaln(n0_grid + 1.0)
    for clique in graph.cliques:
        const, grid_part = margin_terms[tuple(sorted(clique))]
        total += const + grid_part
    for sep in graph.separators:
        const, grid_part = margin_terms[tuple(sorted(sep))]
        total -= const + grid_part
    return total


def log_marginal_full_table(
    table: CountTable, n0: int, graph: DecomposableGraph, prior: DgaPrior
) -> float:
    """Log marginal likelihood of the completed table (observed cells plus
    n0 in the zero cell) under one decomposable graph."""
    if n0 < 0:
        raise DataError("n0 must be nonnegative")
    if graph.n_vertices != table.n_lists:
        raise DataError("graph and table dimension mismatch")
    n0_grid = np.array([n0], dtype=np.float64)
    terms, log_gamma_n1 = _margin_terms(table, prior.kappa, n0_grid)
    _, y = table.dense()
    log_gamma_cells = float(-np.sum(gammaln(y + 1.0)))
    out = _graph_log_marginal_grid(graph, terms, log_gamma_n1, log_gamma_cells, n0_grid)
    return float(out[0])


def posterior_population(
    table: CountTable,
    prior: DgaPrior = DgaPrior(),
    level: float = 0.95,
    graph_subset: Optional[Sequence[DecomposableGraph]] = None,
    seed: Optional[int] = None,
) -> tuple[Estimate, PosteriorGrid, list[tuple[DecomposableGraph, float]]]:
    """Model-averaged posterior of the population size.

    Each graph is weighted by its closed-form marginal likelihood, the
    scale-free 1/N population prior, and an independent-edge graph prior.
    The point estimate is the posterior median; the interval takes
    equal-tailed quantiles at the requested level.
    """
    n_obs = table.n_obs
    if n_obs == 0:
        raise DataError("empty table")
    n_max = prior.n_max if prior.n_max is not None else 100 * n_obs
    if n_max < n_obs:
        raise DataError("n_max must be at least n_obs")
    if graph_subset is not None:
        graphs = list(graph_subset)
    else:
        graphs = enumerate_decomposable_graphs(
            table.n_lists, include_complete=prior.include_complete
        )
    if not graphs:
        raise DataError("empty graph set")

    n0_grid = np.arange(0, n_max - n_obs + 1, dtype=np.float64)
    terms, log_gamma_n1 = _margin_terms(table, prior.kappa, n0_grid)
    _, y = table.dense()
    log_gamma_cells = float(-np.sum(gammaln(y + 1.0)))
    log_pop_prior = -np.log(n_obs + n0_grid)

    n_pairs = table.n_lists * (table.n_lists - 1) // 2
    log_beta, log_1m_beta = np.log(prior.edge_beta), np.log(1.0 - prior.edge_beta)

    running_max: Optional[np.ndarray] = None
    running_sum: Optional[np.ndarray] = None
    graph_log_totals = []
    for graph in graphs:
        lw = _graph_log_marginal_grid(graph, terms, log_gamma_n1, log_gamma_cells, n0_grid)
        lw = lw + log_pop_prior
        lw += graph.n_edges * log_beta + (n_pairs - graph.n_edges) * log_1m_beta
        graph_log_totals.append(float(logsumexp(lw)))
        if running_max is None:
            running_max = lw.copy()
            running_sum = np.ones_like(lw)
        else:
            new_max = np.maximum(running_max, lw)
            running_sum = running_sum * np.exp(running_max - new_max) + np.exp(lw - new_max)
            running_max = new_max
    log_weights = running_max + np.log(running_sum)
    probs = np.exp(log_weights - logsumexp(log_weights))
    probs = probs / probs.sum()
    grid = PosteriorGrid(n0_values=n0_grid.astype(np.int64), log_weights=log_weights,
                         probabilities=probs)
    if grid.tail_mass > 1e-6:
        warnings.warn(
            f"posterior tail mass {grid.tail_mass:.2e} at the n_max={n_max} grid "
            "bound; consider raising n_max"
        )

    point = grid.quantile(0.5, n_obs)
    alpha = 1.0 - level
    lower = grid.quantile(alpha / 2.0, n_obs)
    upper = grid.quantile(1.0 - alpha / 2.0, n_obs)
    config = {
        "estimator": "dga",
        "kappa": prior.kappa,
        "edge_beta": prior.edge_beta,
        "include_complete": prior.include_complete,
        "n_max": n_max,
        "level": level,
        "median": "smallest-N-with-cdf-geq-q",
    }
    estimate = Estimate(estimator="dga", point=float(point),
                        lower=float(min(lower, point)), upper=float(max(upper, point)),
                        level=level, seed=seed, fingerprint=config_fingerprint(config),
                        config=config)
    total = logsumexp(np.array(graph_log_totals))
    graph_weights = [(g, float(np.exp(lt - total))) for g, lt in zip(graphs, graph_log_totals)]
    return estimate, grid, graph_weights
