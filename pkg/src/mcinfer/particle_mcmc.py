"""Particle MH, particle marginal MH, and particle Gibbs on top of the SMC module."""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .core import Proposal, RandomStream
from .smc import SequentialModel, cpf_run, sir_run

__all__ = ["pmh_step", "pmmh_step", "pg_step"]


def pmh_step(
    x_prev: np.ndarray,
    z_prev: float,
    model: SequentialModel,
    N: int,
    rng: RandomStream,
    eta: float = 1.0,
    use_z_hat: bool = False,
):
    """Particle MH: run a filter, resample one path, accept on the Z ratio.

    ``use_z_hat`` switches the acceptance normalizer from Z-tilde to the
    mean-weight estimator (equivalent under proper weighting).  With
    ``eta=0`` (no resampling) the draw sequence and the accept decision
    seed-match the I-MTM2 step.  Returns (x, z, accepted, alpha).
    """
    if not (z_prev > 0):
        raise ValueError("invalid carried normalizer")
    sys = sir_run(model, N, eta, rng)
    wbar = sys.normalized()
    k = rng.choice(N, p=wbar)
    x_star = sys.paths[k].copy()
    z_star = sys.z_hat if use_z_hat else sys.z_tilde
    if not (z_star > 0 and math.isfinite(z_star)):
        raise ValueError("degenerate filter")
    alpha = min(1.0, z_star / z_prev)
    u = rng.uniform()
    if u <= alpha:
        return x_star, z_star, True, alpha
    return np.asarray(x_prev, dtype=float), z_prev, False, alpha


def pmmh_step(
    lambda_prev: np.ndarray,
    x_prev: np.ndarray,
    z_prev: float,
    model_for: Callable[[np.ndarray], SequentialModel],
    log_prior: Callable[[np.ndarray], float],
    proposal: Proposal,
    N: int,
    rng: RandomStream,
    eta: float = 1.0,
):
    """Particle marginal MH for a static parameter plus a latent path.

    ``model_for(lam)`` builds the filter model at the proposed parameter.
    The acceptance ratio is Z(lam*) g(lam*) q(lam|lam*) over the previous
    quantities; with q = g it reduces to the plain Z ratio.  On rejection
    both the parameter and the path are kept.  Returns
    (lam, x, z, accepted, alpha).
    """
    lam_prev = np.asarray(lambda_prev, dtype=float)
    lam_star = np.asarray(proposal.sample(rng, lam_prev), dtype=float)
    lp_star = log_prior(lam_star)
    if lp_star == -math.inf:
        # zero prior: alpha = 0 without running the filter
        rng.uniform()
        return lam_prev, np.asarray(x_prev, dtype=float), z_prev, False, 0.0
    sys = sir_run(model_for(lam_star), N, eta, rng)
    wbar = sys.normalized()
    k = rng.choice(N, p=wbar)
    x_star = sys.paths[k].copy()
    z_star = sys.z_tilde
    log_ratio = (
        math.log(z_star) + lp_star + proposal.log_density(lam_prev, lam_star)
        - math.log(z_prev) - log_prior(lam_prev)
        - proposal.log_density(lam_star, lam_prev)
    )
    alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
    u = rng.uniform()
    if u <= alpha:
        return lam_star, x_star, z_star, True, alpha
    # rejection keeps the previous parameter (the stated "set lambda_t = lambda*"
    # in the source's otherwise-branch is an evident typo)
    return lam_prev, np.asarray(x_prev, dtype=float), z_prev, False, alpha


def pg_step(
    lambda_prev: np.ndarray,
    x_prev: np.ndarray,
    model_for: Callable[[np.ndarray], SequentialModel],
    sample_lambda_given_path: Callable[[np.ndarray, RandomStream], np.ndarray],
    N: int,
    rng: RandomStream,
):
    """Particle Gibbs sweep: conditional filter on the old path, then the parameter.

    Returns (lam, x).
    """
    lam_prev = np.asarray(lambda_prev, dtype=float)
    x_prev = np.asarray(x_prev, dtype=float)
    sys = cpf_run(model_for(lam_prev), x_prev, N, rng)
    wbar = sys.normalized()
    k = rng.choice(N, p=wbar)
    x_new = sys.paths[k].copy()
    try:
        lam_new = sample_lambda_given_path(x_new, rng)
    except Exception as exc:
        raise RuntimeError(f"conditional parameter sampler failed: {exc}") from exc
    return np.asarray(lam_new, dtype=float), x_new
