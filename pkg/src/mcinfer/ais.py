"""Adaptive population importance sampling with pluggable denominators and adaptation.

The weight denominator policy selects between each sample's own proposal, the
temporal mixture of a proposal's past incarnations, and the spatial mixture
across the current population.  Adaptation moves only the location
parameters; scales stay fixed unless explicitly enabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import LogTarget, ParticleSet, RandomStream
from .smc import multinomial_indices, systematic_indices

__all__ = ["ProposalPopulation", "ais_iteration", "ais_estimate", "amis_reweight"]

_DENOMINATORS = ("own", "temporal_mixture", "spatial_mixture")
_ADAPTATIONS = ("none", "resample_GR", "resample_LR", "moment_fit", "mcmc_move", "gradient_move")


def _gauss_logpdf_many(x: np.ndarray, mean: np.ndarray, chol: np.ndarray, logdet: float):
    """Rows of x under N(mean, L L^T)."""
    d = len(mean)
    diff = np.atleast_2d(x) - mean
    sol = np.linalg.solve(chol, diff.T)
    return -0.5 * (d * math.log(2 * math.pi) + logdet + np.sum(sol ** 2, axis=0))


@dataclass
class ProposalPopulation:
    """N Gaussian location-scale proposals with a denominator policy and adaptation rule."""

    means: np.ndarray               # (N, D)
    scales: np.ndarray              # (N, D, D) covariance per proposal, fixed
    denominator: str = "own"
    adaptation: str = "resample_GR"
    resampling: str = "multinomial"
    adapt_scales: bool = False      # scale adaptation stays off by default (unsafe)
    mean_history: list = field(default_factory=list)   # for the temporal mixture
    gradient_steps_done: int = 0
    gradient_step_cap: int = 10

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.scales = np.asarray(self.scales, dtype=float)
        if self.scales.ndim == 2:
            self.scales = np.repeat(self.scales[None], len(self.means), axis=0)
        if self.denominator not in _DENOMINATORS:
            raise ValueError(f"unknown denominator policy {self.denominator!r}")
        if self.adaptation not in _ADAPTATIONS:
            raise ValueError(f"unknown adaptation rule {self.adaptation!r}")
        self._chols = np.linalg.cholesky(self.scales)
        self._logdets = 2.0 * np.sum(
            np.log(np.diagonal(self._chols, axis1=1, axis2=2)), axis=1
        )

    @property
    def n_proposals(self) -> int:
        return len(self.means)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_q_component(self, n: int, pts: np.ndarray, mean=None) -> np.ndarray:
        mu = self.means[n] if mean is None else mean
        return _gauss_logpdf_many(pts, mu, self._chols[n], self._logdets[n])

    def log_q_matrix(self, pts: np.ndarray) -> np.ndarray:
        """(N, len(pts)) matrix of every component's log-density at the points."""
        return np.stack([self.log_q_component(n, pts) for n in range(self.n_proposals)])


def _log_denominators(pop: ProposalPopulation, samples: np.ndarray) -> np.ndarray:
    """Phi at each sample; ``samples`` has shape (N, M, D), returns (N, M)."""
    N, M, D = samples.shape
    flat = samples.reshape(N * M, D)
    if pop.denominator == "own":
        return np.stack([pop.log_q_component(n, samples[n]) for n in range(N)])
    if pop.denominator == "spatial_mixture":
        comps = pop.log_q_matrix(flat)                      # (N, N*M)
        m = comps.max(axis=0)
        mix = m + np.log(np.mean(np.exp(comps - m), axis=0))
        return mix.reshape(N, M)
    # temporal mixture over each proposal's past and current means
    out = np.empty((N, M))
    for n in range(N):
        history = [h[n] for h in pop.mean_history] + [pop.means[n]]
        comps = np.stack([pop.log_q_component(n, samples[n], mean=mu) for mu in history])
        m = comps.max(axis=0)
        out[n] = m + np.log(np.mean(np.exp(comps - m), axis=0))
    return out


def _adapt(pop, samples, log_w, target, rng) -> np.ndarray:
    """New means per the population's adaptation rule."""
    N, M = samples.shape[:2]
    flat = samples.reshape(N * M, pop.dim)
    m = log_w.max()
    if m == -math.inf:
        return pop.means.copy()  # zero total weight: means unchanged
    w = np.exp(log_w - m).ravel()

    if pop.adaptation == "none":
        return pop.means.copy()
    if pop.adaptation == "resample_GR":
        pick = multinomial_indices if pop.resampling == "multinomial" else systematic_indices
        idx = pick(w / w.sum(), N, rng)
        return flat[idx].copy()
    if pop.adaptation == "resample_LR":
        means = np.empty_like(pop.means)
        for n in range(N):
            wn = w[n * M:(n + 1) * M]
            if wn.sum() <= 0:
                means[n] = pop.means[n]
                continue
            k = rng.choice(M, p=wn / wn.sum())
            means[n] = samples[n, k]
        return means
    if pop.adaptation == "moment_fit":
        mean = np.sum(w[:, None] * flat, axis=0) / w.sum()
        return np.repeat(mean[None], N, axis=0)
    if pop.adaptation == "mcmc_move":
        # one symmetric random-walk MH move per mean, targeting the posterior
        means = pop.means.copy()
        for n in range(N):
            cand = means[n] + pop._chols[n] @ rng.normal(size=pop.dim)
            log_ratio = target.eval_log(cand) - target.eval_log(means[n])
            if math.log(rng.uniform() + 1e-300) <= log_ratio:
                means[n] = cand
        return means
    # gradient ascent with a fixed step and a total-step cap
    if pop.gradient_steps_done >= pop.gradient_step_cap or target.grad_log is None:
        return pop.means.copy()
    means = pop.means.copy()
    for n in range(N):
        step = 0.1 * np.trace(pop.scales[n]) / pop.dim
        means[n] = means[n] + step * np.asarray(target.grad_log(means[n]))
    return means


def ais_iteration(
    pop: ProposalPopulation,
    target: LogTarget,
    M: int,
    rng: RandomStream,
):
    """One sampling / weighting / adaptation sweep.

    Draws M samples per proposal, weights them per the denominator policy,
    and adapts the proposal means.  Returns (ParticleSet of size N*M,
    new population, info); info carries the raw draws and target log-values
    so callers can reweight later (AMIS-style) without re-evaluating.
    """
    N, D = pop.n_proposals, pop.dim
    z = rng.normal(size=(N, M, D))
    samples = pop.means[:, None, :] + np.einsum("nij,nmj->nmi", pop._chols, z)

    flat = samples.reshape(N * M, D)
    lp = target.log_many(flat).reshape(N, M)
    log_w = lp - _log_denominators(pop, samples)

    info = {
        "zero_weight": bool(np.all(log_w == -math.inf)),
        "samples": samples,
        "log_pi": lp,
    }
    new_means = _adapt(pop, samples, log_w, target, rng)
    new_pop = replace(
        pop,
        means=new_means,
        mean_history=pop.mean_history + [pop.means.copy()],
        gradient_steps_done=pop.gradient_steps_done
        + (1 if pop.adaptation == "gradient_move" else 0),
    )
    ps = ParticleSet(points=flat, weights=np.exp(log_w.reshape(-1)))
    return ps, new_pop, info


def ais_estimate(iterations: list, g: Callable, Z: Optional[float] = None):
    """Pooled estimators over all iterations' weighted samples.

    Returns (estimate, z_hat): the unnormalized estimator when Z is given,
    the self-normalized one otherwise; z_hat is the mean of all weights.
    """
    if not iterations:
        raise ValueError("empty pool")
    w = np.concatenate([ps.weights for ps in iterations])
    pts = np.concatenate([ps.points for ps in iterations])
    gv = np.array([g(p) for p in pts])
    z_hat = float(np.mean(w))
    if Z is not None:
        return float(np.sum(w * gv) / (len(w) * Z)), z_hat
    if w.sum() <= 0:
        raise ValueError("degenerate weights")
    return float(np.sum(w * gv) / w.sum()), z_hat


def amis_reweight(
    pop: ProposalPopulation,
    all_samples: list,
    all_log_pi: list,
) -> list:
    """Recompute every past sample's denominator as the temporal mixture up to now.

    ``all_samples[t]`` is the (N, M, D) draw array of iteration t and
    ``all_log_pi[t]`` the matching target log-values; the proposal history is
    taken from ``pop.mean_history`` plus the current means.  Returns one
    reweighted ParticleSet per iteration.
    """
    if not all_samples:
        raise ValueError("empty history")
    if len(pop.mean_history) != len(all_samples):
        raise ValueError("history length must match the number of sampling iterations")
    N = pop.n_proposals
    # only the means actually used for sampling enter the temporal mixture
    histories = [[h[n] for h in pop.mean_history] for n in range(N)]
    out = []
    for samples, lp in zip(all_samples, all_log_pi):
        log_den = np.empty(samples.shape[:2])
        for n in range(N):
            comps = np.stack([
                pop.log_q_component(n, samples[n], mean=mu) for mu in histories[n]
            ])
            m = comps.max(axis=0)
            log_den[n] = m + np.log(np.mean(np.exp(comps - m), axis=0))
        log_w = lp - log_den
        out.append(ParticleSet(points=samples.reshape(-1, pop.dim),
                               weights=np.exp(log_w.reshape(-1))))
    return out
