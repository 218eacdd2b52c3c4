"""Nonparametric latent-class capture-recapture by conjugate Gibbs sampling.

Cell probabilities are a stick-breaking mixture of independence models:

    p_x = sum_k w_k * prod_j lambda_kj^x_j (1 - lambda_kj)^(1 - x_j)

with w_1 = v_1, w_k = v_k * prod_{l<k} (1 - v_l), v_k ~ Beta(1, alpha),
alpha ~ Gamma(a_alpha, b_alpha), lambda_kj ~ Uniform(0, 1), and the
scale-free 1/N prior on the population size.  The mixture is truncated at a
class cap; the final stick absorbs the remaining mass so the weights sum to
one exactly.

One sweep updates, in order: class labels of observed individuals; the
non-observation probability p0 and the unobserved count n0 (negative
binomial with size n_obs and success probability 1 - p0, the conditional
implied by the 1/N prior); labels of the n0 unobserved individuals; the
per-class inclusion probabilities (Beta); the stick fractions (Beta); and
the concentration (Gamma conditional from the truncated stick-breaking
representation).  Individuals sharing a pattern are exchangeable, so label
updates draw per-pattern multinomial counts rather than per-individual
labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CountTable, DataError
from .estimate import Estimate, config_fingerprint


@dataclass(frozen=True)
class LcmcrConfig:
    max_classes: int = 10
    a_alpha: float = 0.25
    b_alpha: float = 0.25
    iterations: int = 100_000
    keep: int = 100
    chains: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.max_classes < 1:
            raise DataError("max_classes must be >= 1")
        if not (self.iterations >= self.keep >= 1):
            raise DataError("need iterations >= keep >= 1")
        if self.chains < 1:
            raise DataError("chains must be >= 1")

    def to_dict(self) -> dict:
        return {
            "estimator": "lcmcr",
            "max_classes": self.max_classes,
            "a_alpha": self.a_alpha,
            "b_alpha": self.b_alpha,
            "iterations": self.iterations,
            "keep": self.keep,
            "chains": self.chains,
            "burn_in": "first-half",
            "thinning": "post-burn-in-equally-spaced",
            "n0_conditional": "negbinomial(n_obs, 1-p0)",
            "alpha_conditional": "gamma(a+K-1, b-sum-log1m-sticks)",
        }


@dataclass
class ChainSamples:
    """Retained draws, one row per chain."""

    n0: np.ndarray      # (chains, keep)
    p0: np.ndarray      # (chains, keep)
    k_star: np.ndarray  # (chains, keep) occupied-class counts

    @property
    def n_chains(self) -> int:
        return self.n0.shape[0]

    @property
    def draws_per_chain(self) -> int:
        return self.n0.shape[1]


def draws_csv(samples: ChainSamples) -> str:
    """Raw retained draws as CSV: chain,draw,n0,p0,kstar."""
    lines = ["chain,draw,n0,p0,kstar"]
    for c in range(samples.n_chains):
        for i in range(samples.draws_per_chain):
            lines.append(f"{c},{i},{samples.n0[c, i]},{samples.p0[c, i]!r},"
                         f"{samples.k_star[c, i]}")
    return "\n".join(lines) + "\n"


def _stick_weights(v: np.ndarray) -> np.ndarray:
    """Weights from stick fractions; the last fraction is structurally 1 so
    the truncated weights sum to one exactly."""
    w = np.empty_like(v)
    remaining = 1.0
    for k, vk in enumerate(v):
        w[k] = vk * remaining
        remaining *= 1.0 - vk
    return w


def _retained_indices(iterations: int, keep: int) -> np.ndarray:
    """Equally spaced post-burn-in sweep indices (0-based); burn-in is the
    first half of the run."""
    burn = iterations // 2
    post = iterations - burn
    if keep > post:
        raise DataError(f"cannot retain {keep} draws from {post} post-burn-in sweeps")
    return burn + np.ceil((np.arange(1, keep + 1) * post) / keep).astype(np.int64) - 1


def gibbs_chain(
    table: CountTable,
    config: LcmcrConfig,
    chain_seed,
    trace_state: bool = False,
) -> dict:
    """Run one chain, deterministic given the chain seed.

    Returns retained draws of n0, p0, and the occupied-class count; with
    ``trace_state`` also the (weights, inclusion probability) snapshots the
    recorded p0 values were computed from.
    """
    X, y = table.observed()
    n_obs = int(y.sum())
    if n_obs == 0:
        raise DataError("empty table")
    K = config.max_classes
    L = table.n_lists
    rng = np.random.default_rng(chain_seed)
    Xf = X.astype(np.float64)

    lam = rng.uniform(size=(K, L))
    alpha = rng.gamma(config.a_alpha, 1.0 / config.b_alpha)
    v = np.ones(K)
    if K > 1:
        v[:-1] = rng.beta(1.0, alpha, size=K - 1)
    w = _stick_weights(v)

    retained = _retained_indices(config.iterations, config.keep)
    retain_at = {int(i): slot for slot, i in enumerate(retained)}
    out_n0 = np.empty(config.keep, dtype=np.int64)
    out_p0 = np.empty(config.keep)
    out_k = np.empty(config.keep, dtype=np.int64)
    traced_w = np.empty((config.keep, K)) if trace_state else None
    traced_lam = np.empty((config.keep, K, L)) if trace_state else None

    for sweep in range(config.iterations):
        log_lam = np.log(lam)
        log_1m = np.log1p(-lam)

        # class labels of observed individuals, grouped by pattern
        log_w = np.log(np.maximum(w, 1e-300))
        logits = Xf @ log_lam.T + (1.0 - Xf) @ log_1m.T + log_w[None, :]
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        z_obs = rng.multinomial(y, probs)

        # unobserved count under the 1/N population prior
        miss_by_class = w * np.exp(log_1m.sum(axis=1))
        p0 = float(miss_by_class.sum())
        n0 = int(rng.negative_binomial(n_obs, max(1.0 - p0, 1e-12)))

        if n0 > 0:
            pv = miss_by_class / miss_by_class.sum()
            z0 = rng.multinomial(n0, pv)
        else:
            z0 = np.zeros(K, dtype=np.int64)

        m = z_obs.sum(axis=0) + z0
        slot = retain_at.get(sweep)
        if slot is not None:
            out_n0[slot] = n0
            out_p0[slot] = p0
            out_k[slot] = int(np.count_nonzero(m))
            if trace_state:
                traced_w[slot] = w
                traced_lam[slot] = lam

        captured = z_obs.T.astype(np.float64) @ Xf
        uncaptured = m[:, None] - captured
        lam = rng.beta(1.0 + captured, 1.0 + uncaptured)
        lam = np.clip(lam, 1e-12, 1.0 - 1e-12)

        if K > 1:
            tail = np.concatenate([np.cumsum(m[::-1])[::-1][1:], [0]])
            v = np.ones(K)
            v[:-1] = np.clip(rng.beta(1.0 + m[:-1], alpha + tail[:-1]), 1e-12, 1.0 - 1e-12)
            alpha = rng.gamma(
                config.a_alpha + (K - 1),
                1.0 / (config.b_alpha - float(np.sum(np.log1p(-v[:-1])))),
            )
        w = _stick_weights(v)

    result = {"n0": out_n0, "p0": out_p0, "k_star": out_k}
    if trace_state:
        result["weights"] = traced_w
        result["inclusion_probs"] = traced_lam
    return result


def multi_chain_posterior(
    table: CountTable,
    config: LcmcrConfig = LcmcrConfig(),
    level: float = 0.95,
) -> tuple[Estimate, ChainSamples]:
    """Pool independently seeded chains; the estimate is the pooled median
    of N = n_obs + n0 with equal-tailed quantiles.

    Chain i draws its generator from the pair (config.seed, i), so execution
    order cannot affect the pooled result.
    """
    runs = [
        gibbs_chain(table, config, np.random.SeedSequence((config.seed, i)))
        for i in range(config.chains)
    ]
    samples = ChainSamples(
        n0=np.stack([r["n0"] for r in runs]),
        p0=np.stack([r["p0"] for r in runs]),
        k_star=np.stack([r["k_star"] for r in runs]),
    )
    pooled_n = table.n_obs + samples.n0.ravel()
    point = float(np.median(pooled_n))
    alpha = 1.0 - level
    lower = float(np.quantile(pooled_n, alpha / 2.0))
    upper = float(np.quantile(pooled_n, 1.0 - alpha / 2.0))
    config_dict = dict(config.to_dict(), level=level)
    estimate = Estimate(
        estimator="lcmcr", point=point,
        lower=min(lower, point), upper=max(upper, point),
        level=level, seed=config.seed,
        fingerprint=config_fingerprint(config_dict), config=config_dict,
    )
    return estimate, samples
