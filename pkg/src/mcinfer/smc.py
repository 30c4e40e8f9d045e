"""Sequential importance sampling, SIR with proper post-resampling weights, CPF."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import RandomStream

__all__ = [
    "SequentialModel",
    "ParticleSystem",
    "sis_advance",
    "sir_run",
    "marginal_z_tilde",
    "cpf_run",
    "multinomial_indices",
    "systematic_indices",
]


@dataclass
class SequentialModel:
    """Factorized target and proposal over D stages.

    ``log_gamma(d, x, x_prev)`` is the d-th conditional log-factor
    (``x_prev`` is None at d=0); ``sample_q(d, x_prev, rng)`` draws from the
    d-th proposal factor and ``log_q(d, x, x_prev)`` evaluates it.
    """

    stages: int
    log_gamma: Callable
    sample_q: Callable
    log_q: Callable


@dataclass
class ParticleSystem:
    """Paths, incremental and cumulative weights, and the running normalizers."""

    paths: np.ndarray            # (M, d_done) so far
    log_weights: np.ndarray      # cumulative, unnormalized
    stage: int
    log_z_hat: float = -math.inf     # log (1/M) sum w_d
    log_z_tilde: float = 0.0         # log prod_d sum wbar_{d-1} beta_d
    resampled_at: list = field(default_factory=list)
    ancestry: Optional[np.ndarray] = None

    @property
    def n_particles(self) -> int:
        return len(self.log_weights)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def z_hat(self) -> float:
        return math.exp(self.log_z_hat)

    @property
    def z_tilde(self) -> float:
        return math.exp(self.log_z_tilde)

    def normalized(self) -> np.ndarray:
        m = self.log_weights.max()
        if m == -math.inf:
            raise ValueError("all weights zero")
        w = np.exp(self.log_weights - m)
        return w / w.sum()

    def ess(self, variant: str = "inv_sum_sq") -> float:
        wbar = self.normalized()
        if variant == "inv_sum_sq":
            return float(1.0 / np.sum(wbar ** 2))
        if variant == "inv_max":
            return float(1.0 / np.max(wbar))
        raise ValueError(f"unknown ESS variant {variant!r}")


def _logsumexp(a: np.ndarray) -> float:
    m = np.max(a)
    if m == -math.inf:
        return -math.inf
    return float(m + np.log(np.sum(np.exp(a - m))))


def multinomial_indices(wbar: np.ndarray, n: int, rng: RandomStream) -> np.ndarray:
    cp = np.cumsum(wbar)
    cp /= cp[-1]
    return np.searchsorted(cp, rng.uniform(size=n), side="right").clip(0, len(wbar) - 1)


def systematic_indices(wbar: np.ndarray, n: int, rng: RandomStream) -> np.ndarray:
    cp = np.cumsum(wbar)
    cp /= cp[-1]
    u = (rng.uniform() + np.arange(n)) / n
    return np.searchsorted(cp, u, side="right").clip(0, len(wbar) - 1)


def _init_system(M: int) -> ParticleSystem:
    return ParticleSystem(
        paths=np.empty((M, 0)),
        log_weights=np.zeros(M),
        stage=0,
        log_z_hat=0.0,
        log_z_tilde=0.0,
    )


def sis_advance(
    sys: ParticleSystem,
    model: SequentialModel,
    d: int,
    rng: RandomStream,
    particle_streams: Optional[Sequence[RandomStream]] = None,
    reference: Optional[np.ndarray] = None,
) -> ParticleSystem:
    """Propagate stage d: x_d ~ q_d, incremental weight beta_d = gamma_d / q_d.

    ``particle_streams`` (one per particle) makes the propagation
    reproducible independently of particle count; ``reference`` pins
    particle 0 to a fixed value (conditional particle filter).
    """
    M = sys.n_particles
    prev = sys.paths[:, d - 1] if d > 0 else [None] * M
    new_col = np.empty(M)
    log_beta = np.empty(M)
    for m in range(M):
        r = particle_streams[m] if particle_streams is not None else rng
        if reference is not None and m == 0:
            x = float(reference)
        else:
            x = float(model.sample_q(d, prev[m], r))
        lg = model.log_gamma(d, x, prev[m])
        lq = model.log_q(d, x, prev[m])
        if lq == -math.inf:
            raise ValueError("proposal support violation at stage %d" % d)
        new_col[m] = x
        log_beta[m] = lg - lq

    # Z-tilde factor uses the normalized weights before this stage's update
    log_prev_norm = sys.log_weights - _logsumexp(sys.log_weights)
    log_factor = _logsumexp(log_prev_norm + log_beta)

    log_w = sys.log_weights + log_beta
    if np.all(log_w == -math.inf):
        raise ValueError("all weights zero at stage %d" % d)
    return ParticleSystem(
        paths=np.hstack([sys.paths, new_col[:, None]]),
        log_weights=log_w,
        stage=d + 1,
        log_z_hat=_logsumexp(log_w) - math.log(M),
        log_z_tilde=sys.log_z_tilde + log_factor,
        resampled_at=list(sys.resampled_at),
        ancestry=sys.ancestry,
    )


def _resample(sys: ParticleSystem, rng: RandomStream, scheme: str,
              conditional: bool = False) -> ParticleSystem:
    """Resample all paths; afterwards every unnormalized weight equals Zhat_d."""
    M = sys.n_particles
    wbar = sys.normalized()
    if scheme == "multinomial":
        idx = multinomial_indices(wbar, M - 1 if conditional else M, rng)
    elif scheme == "systematic":
        idx = systematic_indices(wbar, M - 1 if conditional else M, rng)
    else:
        raise ValueError(f"unknown resampling scheme {scheme!r}")
    if conditional:
        idx = np.concatenate([[0], idx])  # the reference particle survives
    return ParticleSystem(
        paths=sys.paths[idx],
        log_weights=np.full(M, sys.log_z_hat),  # proper weighting
        stage=sys.stage,
        log_z_hat=sys.log_z_hat,
        log_z_tilde=sys.log_z_tilde,
        resampled_at=sys.resampled_at + [sys.stage - 1],
        ancestry=idx,
    )


def sir_run(
    model: SequentialModel,
    M: int,
    eta: float,
    rng: RandomStream,
    resampling: str = "multinomial",
    ess_variant: str = "inv_sum_sq",
) -> ParticleSystem:
    """Sequential importance resampling over all stages.

    Resamples the full population whenever ESS < eta * M (eta=0 gives pure
    SIS, eta=1 the bootstrap filter) and resets the unnormalized weights to
    the stage normalizer Zhat_d (proper weighting).
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must be in [0, 1]")
    streams = rng.split(M)
    sys = _init_system(M)
    for d in range(model.stages):
        sys = sis_advance(sys, model, d, rng, particle_streams=streams)
        if eta > 0 and sys.ess(ess_variant) < eta * M:
            sys = _resample(sys, rng, resampling)
    return sys


def marginal_z_tilde(sys: ParticleSystem) -> float:
    """The normalized-weights marginal likelihood estimator accumulated so far."""
    if sys.log_z_tilde == -math.inf:
        raise ValueError("zero denominator stage encountered")
    return sys.z_tilde


def cpf_run(
    model: SequentialModel,
    reference: np.ndarray,
    M: int,
    rng: RandomStream,
    resampling: str = "multinomial",
) -> ParticleSystem:
    """Conditional particle filter: particle 0 is pinned to the reference path.

    Resampling happens at every stage and never evicts the reference.
    Returns the final weighted system (normalized weights give the particle
    approximation conditioned on the reference).
    """
    reference = np.asarray(reference, dtype=float).ravel()
    if len(reference) != model.stages:
        raise ValueError("reference path length must equal stage count")
    streams = rng.split(M)
    sys = _init_system(M)
    for d in range(model.stages):
        if not math.isfinite(model.log_gamma(d, float(reference[d]),
                                             float(reference[d - 1]) if d > 0 else None)):
            raise ValueError("invalid reference")
        sys = sis_advance(sys, model, d, rng, particle_streams=streams,
                          reference=reference[d])
        # the final-stage weights stay intact so the output draw can use them
        if M > 1 and d < model.stages - 1:
            sys = _resample(sys, rng, resampling, conditional=True)
    return sys
