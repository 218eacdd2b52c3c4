"""MCMC mixing diagnostics: split R-hat and effective sample size.

Both work on a (chains, draws) array.  Chains are split in half first, so a
single long chain still yields a between/within comparison.  The effective
sample size truncates the autocorrelation sum at the first negative paired
sum (Geyer's initial positive sequence).  Constant input has no defined
diagnostic and is flagged rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

from .data import DataError
from .lcmcr import ChainSamples


@dataclass(frozen=True)
class DiagnosticResult:
    rhat: Optional[float]
    ess: Optional[float]
    n_samples: int

    @property
    def defined(self) -> bool:
        return self.rhat is not None


def _split_chains(draws: np.ndarray) -> np.ndarray:
    n = draws.shape[1] // 2
    return np.concatenate([draws[:, :n], draws[:, n:2 * n]], axis=0)


def _rank_normalize(draws: np.ndarray) -> np.ndarray:
    flat = draws.ravel()
    ranks = np.argsort(np.argsort(flat, kind="stable"), kind="stable") + 1.0
    z = norm.ppf((ranks - 0.375) / (flat.size + 0.25))
    return z.reshape(draws.shape)


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance by FFT, lags 0..n-1."""
    n = x.size
    xc = x - x.mean()
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n].real
    return acov / n


def split_rhat(draws: np.ndarray) -> Optional[float]:
    chains = _split_chains(np.asarray(draws, dtype=np.float64))
    m, n = chains.shape
    if n < 2:
        raise DataError("need at least 4 draws per chain")
    within = float(np.mean(np.var(chains, axis=1, ddof=1)))
    if within == 0.0:
        return None
    means = chains.mean(axis=1)
    between = n * float(np.var(means, ddof=1))
    var_plus = (n - 1) / n * within + between / n
    return float(np.sqrt(var_plus / within))


def effective_sample_size(draws: np.ndarray) -> Optional[float]:
    chains = _split_chains(np.asarray(draws, dtype=np.float64))
    m, n = chains.shape
    if n < 2:
        raise DataError("need at least 4 draws per chain")
    within = float(np.mean(np.var(chains, axis=1, ddof=1)))
    if within == 0.0:
        return None
    means = chains.mean(axis=1)
    between = n * float(np.var(means, ddof=1))
    var_plus = (n - 1) / n * within + between / n
    acov = np.mean([_autocovariance(chains[i]) for i in range(m)], axis=0)
    rho = 1.0 - (within - acov) / var_plus
    rho[0] = 1.0
    # Geyer: accumulate rho in (odd, even) pairs while the pair sum stays positive
    tau = 0.0
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0.0:
            break
        tau += pair
        t += 2
    tau = max(2.0 * tau - 1.0, 1.0 / (m * n))
    return float(m * n / tau)


def diagnose(draws: np.ndarray, rank_normalized: bool = False) -> DiagnosticResult:
    arr = np.asarray(draws, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError("expected a (chains, draws) array")
    work = _rank_normalize(arr) if rank_normalized else arr
    return DiagnosticResult(rhat=split_rhat(work), ess=effective_sample_size(work),
                            n_samples=arr.size)


def convergence_diagnostics(
    samples: ChainSamples, rank_normalized: bool = False
) -> dict[str, DiagnosticResult]:
    """Split R-hat and effective sample size for the unobserved count, the
    non-observation probability, and the occupied-class count."""
    if samples.draws_per_chain < 4:
        raise DataError("need at least 4 draws per chain")
    return {
        "n0": diagnose(samples.n0, rank_normalized),
        "p0": diagnose(samples.p0, rank_normalized),
        "k_star": diagnose(samples.k_star.astype(np.float64), rank_normalized),
    }
