"""Langevin and Hamiltonian samplers with leapfrog integration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LogTarget, RandomStream

__all__ = ["PhasePoint", "mala_step", "leapfrog", "hmc_step", "dual_averaging_warmup"]


@dataclass
class PhasePoint:
    position: np.ndarray
    momentum: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.momentum = np.asarray(self.momentum, dtype=float)
        if not (np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.momentum))):
            raise ValueError("phase point must be finite")


def _grad(target: LogTarget, x: np.ndarray) -> np.ndarray:
    if target.grad_log is None:
        raise ValueError("target has no gradient")
    g = np.asarray(target.grad_log(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient")
    return g


def mala_step(state, target: LogTarget, dtau: float, rng: RandomStream):
    """Euler-Maruyama Langevin proposal with MH correction.

    Proposes x' = x + (dtau/2) grad log pi(x) + sqrt(dtau) z and accepts with
    the Gaussian forward/backward ratio.  Returns (point, accepted, alpha).
    """
    if dtau <= 0:
        raise ValueError("dtau must be positive")
    x = np.asarray(state, dtype=float)
    gx = _grad(target, x)
    z = rng.normal(size=x.size)
    y = x + 0.5 * dtau * gx + math.sqrt(dtau) * z

    def log_q(b, a, ga):
        mean = a + 0.5 * dtau * ga
        return float(-0.5 * np.sum((b - mean) ** 2) / dtau)

    gy = _grad(target, y)
    log_ratio = (
        target.eval_log(y) + log_q(x, y, gy) - target.eval_log(x) - log_q(y, x, gx)
    )
    alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
    u = rng.uniform()
    if u <= alpha:
        return y, True, alpha
    return x, False, alpha


def leapfrog(pp: PhasePoint, grad_log, dtau: float, L: int) -> PhasePoint:
    """L deterministic half-kick / drift / half-kick steps."""
    if L < 1:
        raise ValueError("L must be >= 1")
    theta = pp.position.copy()
    p = pp.momentum.copy()
    for _ in range(L):
        p = p + 0.5 * dtau * np.asarray(grad_log(theta), dtype=float)
        theta = theta + dtau * p
        p = p + 0.5 * dtau * np.asarray(grad_log(theta), dtype=float)
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(p))):
            raise ValueError("non-finite leapfrog state")
    return PhasePoint(position=theta, momentum=p)


def _hamiltonian(target: LogTarget, pp: PhasePoint) -> float:
    h = -target.eval_log(pp.position) + 0.5 * float(pp.momentum @ pp.momentum)
    if math.isnan(h):
        raise ValueError("non-finite Hamiltonian")
    return h


def hmc_step(state, target: LogTarget, dtau: float, L: int, rng: RandomStream):
    """Hamiltonian Monte Carlo transition with identity mass matrix.

    Fresh momentum, L leapfrog steps, momentum negation, and acceptance
    min[1, exp(-H(new) + H(old))].  Returns (point, accepted, alpha).
    """
    x = np.asarray(state, dtype=float)
    p0 = rng.normal(size=x.size)
    start = PhasePoint(position=x, momentum=p0)
    end = leapfrog(start, lambda th: _grad(target, th), dtau, L)
    end = PhasePoint(position=end.position, momentum=-end.momentum)
    log_ratio = _hamiltonian(target, start) - _hamiltonian(target, end)
    alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
    u = rng.uniform()
    if u <= alpha:
        return end.position, True, alpha
    return x, False, alpha


def dual_averaging_warmup(
    step_fn,
    init,
    rng: RandomStream,
    target_rate: float,
    dtau0: float = 0.1,
    n_warmup: int = 500,
    gain_decay: float = 0.6,
):
    """One-shot step-size warmup: log dtau_t += gamma_t (alpha_t - target).

    ``step_fn(state, dtau, rng)`` must return (state, accepted, alpha).
    Returns (tuned dtau, final state).
    """
    state = np.asarray(init, dtype=float)
    log_dtau = math.log(dtau0)
    for t in range(1, n_warmup + 1):
        state, _, alpha = step_fn(state, math.exp(log_dtau), rng)
        log_dtau += t ** (-gain_decay) * (alpha - target_rate)
    return math.exp(log_dtau), state
