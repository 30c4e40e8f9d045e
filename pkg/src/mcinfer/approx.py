"""Pseudo-marginal MH (GIMH/MCWM), single variable exchange, ABC-MH, noisy MH."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import LogTarget, Proposal, RandomStream

__all__ = [
    "LikelihoodEstimator",
    "AbcKernel",
    "pseudo_marginal_step",
    "sve_step",
    "abc_mh_step",
    "noisy_mh_step",
]


@dataclass
class LikelihoodEstimator:
    """Randomized likelihood estimator; unbiasedness is the caller's declaration."""

    estimate_log: Callable[[np.ndarray, RandomStream], float]
    declared_unbiased: bool = True
    inner_samples: int = 1

    def __call__(self, theta, rng: RandomStream) -> float:
        v = float(self.estimate_log(np.asarray(theta, dtype=float), rng))
        if math.isnan(v) or v == math.inf:
            raise ValueError("likelihood estimate must be finite or -inf")
        return v


@dataclass
class AbcKernel:
    """Distance-weighting kernel h_eps in [0, 1], maximal at zero distance."""

    kind: str
    tolerance: float
    norm: Callable[[np.ndarray], float] = None

    def __post_init__(self):
        if self.kind not in ("indicator", "gaussian"):
            raise ValueError(f"unknown ABC kernel {self.kind!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.norm is None:
            self.norm = lambda v: float(np.linalg.norm(np.ravel(v)))

    def log_h(self, distance: float) -> float:
        if self.kind == "indicator":
            return 0.0 if distance <= self.tolerance else -math.inf
        return -0.5 * (distance / self.tolerance) ** 2


def pseudo_marginal_step(
    state,
    log_est_prev: float,
    log_prior: Callable[[np.ndarray], float],
    lik_est: LikelihoodEstimator,
    proposal: Proposal,
    variant: str,
    rng: RandomStream,
):
    """Pseudo-marginal MH transition.

    GIMH recycles the log-likelihood estimate carried from the previous
    iteration in the denominator; MCWM re-estimates it afresh.  Returns
    (point, log_est, accepted, alpha).
    """
    if variant not in ("GIMH", "MCWM"):
        raise ValueError(f"unknown pseudo-marginal variant {variant!r}")
    x = np.asarray(state, dtype=float)
    candidate = np.asarray(proposal.sample(rng, x), dtype=float)
    log_est_new = lik_est(candidate, rng)
    log_est_den = lik_est(x, rng) if variant == "MCWM" else log_est_prev

    log_num = log_est_new + log_prior(candidate) + proposal.log_density(x, candidate)
    log_den = log_est_den + log_prior(x) + proposal.log_density(candidate, x)
    if log_num == -math.inf and log_den == -math.inf:
        # estimator returned zero at both points: forced rejection, logged
        return x, log_est_prev, False, 0.0
    alpha = min(1.0, math.exp(min(log_num - log_den, 0.0)))
    u = rng.uniform()
    if u <= alpha:
        return candidate, log_est_new, True, alpha
    if variant == "MCWM":
        # MCWM carries no estimate; return the fresh denominator estimate
        return x, log_est_den, False, alpha
    return x, log_est_prev, False, alpha


def sve_step(
    state,
    y_prev,
    y_true,
    log_phi: Callable,
    log_prior: Callable,
    proposal: Proposal,
    sample_y: Callable,
    rng: RandomStream,
):
    """Single variable exchange transition for doubly-intractable likelihoods.

    ``log_phi(y, theta)`` is the unnormalized log-likelihood kernel and
    ``sample_y(theta, rng)`` draws synthetic data from it (one inner sample).
    Returns (point, y, accepted, alpha).
    """
    x = np.asarray(state, dtype=float)
    candidate = np.asarray(proposal.sample(rng, x), dtype=float)
    y_new = sample_y(candidate, rng)
    lp_phi_new = log_phi(y_new, candidate)
    if lp_phi_new == -math.inf:
        rng.uniform()
        return x, y_prev, False, 0.0
    log_ratio = (
        log_phi(y_true, candidate) - log_phi(y_true, x)
        + log_prior(candidate) - log_prior(x)
        + proposal.log_density(x, candidate) - proposal.log_density(candidate, x)
        + log_phi(y_prev, x) - lp_phi_new
    )
    alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
    u = rng.uniform()
    if u <= alpha:
        return candidate, y_new, True, alpha
    return x, y_prev, False, alpha


def abc_mh_step(
    state,
    y_prev,
    y_true,
    log_prior: Callable,
    proposal: Proposal,
    simulator: Callable,
    kernel: AbcKernel,
    rng: RandomStream,
):
    """Likelihood-free MH on the ABC-extended target.

    The indicator kernel rejects outright when the simulated data lie
    farther than the tolerance; otherwise (and for the Gaussian kernel) the
    acceptance ratio involves only prior, proposal and kernel factors.
    Returns (point, y, accepted, alpha).
    """
    x = np.asarray(state, dtype=float)
    candidate = np.asarray(proposal.sample(rng, x), dtype=float)
    try:
        y_new = simulator(candidate, rng)
    except Exception as exc:
        raise RuntimeError(f"simulator failed: {exc}") from exc
    dist_new = kernel.norm(np.asarray(y_new) - np.asarray(y_true))

    if kernel.kind == "indicator":
        if dist_new > kernel.tolerance:
            return x, y_prev, False, 0.0
        log_ratio = (
            log_prior(candidate) - log_prior(x)
            + proposal.log_density(x, candidate) - proposal.log_density(candidate, x)
        )
    else:
        dist_prev = kernel.norm(np.asarray(y_prev) - np.asarray(y_true))
        log_ratio = (
            kernel.log_h(dist_new) - kernel.log_h(dist_prev)
            + log_prior(candidate) - log_prior(x)
            + proposal.log_density(x, candidate) - proposal.log_density(candidate, x)
        )
    alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
    u = rng.uniform()
    if u <= alpha:
        return candidate, y_new, True, alpha
    return x, y_prev, False, alpha


def noisy_mh_step(
    state,
    target: LogTarget,
    proposal: Proposal,
    rho_hat: Callable,
    rng: RandomStream,
):
    """MH with a randomized acceptance-ratio estimator.

    ``rho_hat(state, candidate, rng)`` returns an estimate of the MH ratio
    (drawing any auxiliary data internally); it is clipped below at zero.
    Returns (point, accepted, alpha_hat).
    """
    x = np.asarray(state, dtype=float)
    candidate = np.asarray(proposal.sample(rng, x), dtype=float)
    r = float(rho_hat(x, candidate, rng))
    if math.isnan(r) or math.isinf(r):
        raise ValueError("rho_hat must be finite")
    alpha = min(1.0, max(0.0, r))
    u = rng.uniform()
    if u <= alpha:
        return candidate, True, alpha
    return x, False, alpha
