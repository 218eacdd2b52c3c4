"""Uniform front end over the four population-size estimators.

Every estimator exposes ``name``, a config dict, and ``run(table, seed)``
returning an Estimate.  Budget-heavy settings (bootstrap replicates, chain
counts) live here so harnesses can swap reduced and full budgets wholesale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from .data import CountTable
from .dga import DgaPrior, posterior_population
from .estimate import Estimate
from .lcmcr import LcmcrConfig, multi_chain_posterior
from .loglinear import estimate_independence, estimate_sparsemse


class Estimator(Protocol):
    name: str

    def run(self, table: CountTable, seed: int) -> Estimate: ...


@dataclass(frozen=True)
class IndependenceEstimator:
    bootstrap: int = 1000
    level: float = 0.95
    name: str = "independence"

    def run(self, table: CountTable, seed: int) -> Estimate:
        return estimate_independence(table, level=self.level,
                                     bootstrap=self.bootstrap, seed=seed)


@dataclass(frozen=True)
class SparseMseEstimator:
    threshold: float = 0.02
    bootstrap: int = 1000
    level: float = 0.95
    name: str = "sparsemse"

    def run(self, table: CountTable, seed: int) -> Estimate:
        return estimate_sparsemse(table, threshold=self.threshold,
                                  level=self.level, bootstrap=self.bootstrap,
                                  seed=seed)


@dataclass(frozen=True)
class DgaEstimator:
    kappa: float = 0.5
    edge_beta: float = 0.5
    include_complete: bool = False
    n_max_factor: int = 100
    n_max: Optional[int] = None
    level: float = 0.95
    name: str = "dga"

    def run(self, table: CountTable, seed: int) -> Estimate:
        n_max = self.n_max if self.n_max is not None else self.n_max_factor * table.n_obs
        prior = DgaPrior(kappa=self.kappa, edge_beta=self.edge_beta,
                         include_complete=self.include_complete, n_max=n_max)
        estimate, _, _ = posterior_population(table, prior, level=self.level, seed=seed)
        return estimate


@dataclass(frozen=True)
class LcmcrEstimator:
    max_classes: int = 10
    iterations: int = 100_000
    keep: int = 100
    chains: int = 200
    a_alpha: float = 0.25
    b_alpha: float = 0.25
    level: float = 0.95
    name: str = "lcmcr"

    def run(self, table: CountTable, seed: int) -> Estimate:
        config = LcmcrConfig(max_classes=self.max_classes, a_alpha=self.a_alpha,
                             b_alpha=self.b_alpha, iterations=self.iterations,
                             keep=self.keep, chains=self.chains, seed=seed)
        estimate, _ = multi_chain_posterior(table, config, level=self.level)
        return estimate


ESTIMATOR_NAMES = ("independence", "sparsemse", "dga", "lcmcr")


def default_estimators(budget: str = "full") -> list:
    """The four standard estimators at a named budget.

    "full" matches the documented defaults; "reduced" cuts Monte Carlo
    budgets for desk-scale harness runs (bootstrap 200, 20 chains of 1e4
    iterations, population grid bound 50x of the observed count).
    """
    if budget == "full":
        return [IndependenceEstimator(), SparseMseEstimator(), DgaEstimator(),
                LcmcrEstimator()]
    if budget == "reduced":
        return [
            IndependenceEstimator(bootstrap=200),
            SparseMseEstimator(bootstrap=200),
            DgaEstimator(n_max_factor=50),
            LcmcrEstimator(iterations=10_000, keep=100, chains=20),
        ]
    raise ValueError(f"unknown budget {budget!r}")


def make_estimator(name: str, budget: str = "full", **overrides) -> Estimator:
    classes = {
        "independence": IndependenceEstimator,
        "sparsemse": SparseMseEstimator,
        "dga": DgaEstimator,
        "lcmcr": LcmcrEstimator,
    }
    if name not in classes:
        raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATOR_NAMES}")
    base = {e.name: e for e in default_estimators(budget)}[name]
    params = {**base.__dict__, **overrides}
    params.pop("name", None)
    return classes[name](**params)
