"""Convergence diagnostics: PSRF, chain ESS, autocorrelation, chain splitting."""

from __future__ import annotations

import json
import math
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "psrf",
    "psrf_multivariate",
    "autocorrelation",
    "ess_mcmc",
    "split_second_half",
    "split_chain",
    "diagnostics_report",
]


def psrf(chains: Sequence[np.ndarray]) -> float:
    """Potential scale reduction factor for S scalar chains of equal length M.

    B and W are the between- and within-chain variances; the PSRF is
    sqrt(var_plus / W) with var_plus = ((M-1)/M) W + B/M.
    """
    arr = np.asarray(chains, dtype=float)
    if arr.ndim != 2:
        raise ValueError("chains must be S sequences of equal length")
    S, M = arr.shape
    if S < 2 or M < 2:
        raise ValueError("need at least 2 chains of length >= 2")
    means = arr.mean(axis=1)
    grand = means.mean()
    B = M / (S - 1) * np.sum((means - grand) ** 2)
    W = float(np.mean(arr.var(axis=1, ddof=1)))
    if W == 0:
        raise ValueError("degenerate within-chain variance")
    var_plus = (M - 1) / M * W + B / M
    return float(math.sqrt(var_plus / W))


def psrf_multivariate(chains: Sequence[np.ndarray]) -> np.ndarray:
    """Per-dimension PSRF for S chains of shape (M, D)."""
    arr = np.asarray(chains, dtype=float)
    if arr.ndim != 3:
        raise ValueError("expected S x M x D chains")
    return np.array([psrf(arr[:, :, d]) for d in range(arr.shape[2])])


def autocorrelation(trace: np.ndarray, lag: int) -> float:
    """Biased sample autocorrelation at the given lag."""
    x = np.asarray(trace, dtype=float).ravel()
    T = len(x)
    if lag >= T:
        raise ValueError("lag must be smaller than the trace length")
    if lag == 0:
        return 1.0
    xc = x - x.mean()
    denom = float(np.sum(xc ** 2))
    if denom == 0:
        raise ValueError("constant trace")
    return float(np.sum(xc[:-lag] * xc[lag:]) / denom)


def ess_mcmc(trace: np.ndarray, max_lag: Optional[int] = None) -> float:
    """Effective sample size T / (1 + 2 sum rho(tau)).

    The autocorrelation sum is truncated at the first negative estimate
    (initial-positive-sequence rule); this cutoff is the single biggest
    estimator choice here.
    """
    x = np.asarray(trace, dtype=float).ravel()
    T = len(x)
    if max_lag is None:
        max_lag = T - 1
    xc = x - x.mean()
    denom = float(np.sum(xc ** 2))
    if denom == 0:
        raise ValueError("constant trace")
    # all lags at once via FFT-free correlation is fine at these sizes
    s = 0.0
    for lag in range(1, max_lag + 1):
        rho = float(np.sum(xc[:-lag] * xc[lag:]) / denom)
        if rho < 0:
            break
        s += rho
    return float(T / (1.0 + 2.0 * s))


def split_second_half(chains: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Keep only the second half of each chain (multi-chain protocol step)."""
    out = []
    for c in chains:
        c = np.asarray(c)
        if len(c) < 4:
            raise ValueError("chain too short to split")
        out.append(c[len(c) // 2:])
    return out


def split_chain(chain: np.ndarray, parts: int = 2) -> list[np.ndarray]:
    """Split one chain into equal parts treated as independent chains."""
    c = np.asarray(chain)
    if len(c) < 2 * parts:
        raise ValueError("chain too short to split")
    n = len(c) // parts
    return [c[i * n:(i + 1) * n] for i in range(parts)]


def diagnostics_report(chains: Sequence[np.ndarray], accepted=None, path=None) -> dict:
    """Per-dimension R-hat, ESS, lag-1 autocorrelation and acceptance rate as JSON."""
    arr = np.asarray(chains, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    S, M, D = arr.shape
    report = {"n_chains": S, "chain_length": M, "dimensions": []}
    for d in range(D):
        report["dimensions"].append({
            "dim": d,
            "psrf": psrf(arr[:, :, d]) if S >= 2 else None,
            "ess": float(np.mean([ess_mcmc(arr[j, :, d]) for j in range(S)])),
            "lag1_autocorrelation": float(
                np.mean([autocorrelation(arr[j, :, d], 1) for j in range(S)])
            ),
        })
    if accepted is not None:
        report["acceptance_rate"] = float(np.mean(accepted))
    if path is not None:
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2)
    return report
