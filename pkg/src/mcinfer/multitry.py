"""Multiple-candidate MH variants and delayed rejection.

Candidate randomness is always consumed before the selection uniform, and the
accept/reject uniform comes last, so seed-matched reductions (MTM with N=1 vs
plain MH, PMH without resampling vs I-MTM2) hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LogTarget, Proposal, RandomStream
from .chain import mh_alpha

__all__ = [
    "WeightedCandidateSet",
    "mtm_step",
    "imtm_step",
    "imtm2_step",
    "gms_step",
    "gms_estimate",
    "gms_recover_chain",
    "ensemble_step",
    "ensemble_selection_probs",
    "drm_step",
]


@dataclass
class WeightedCandidateSet:
    """Candidates with standard importance weights pi/q and their mean weight."""

    candidates: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.candidates = np.atleast_2d(np.asarray(self.candidates, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")

    @property
    def z_hat(self) -> float:
        return float(np.mean(self.weights))

    def normalized(self) -> np.ndarray:
        s = self.weights.sum()
        if s <= 0:
            raise ValueError("degenerate weights")
        return self.weights / s


def _log_weight(target: LogTarget, proposal: Proposal, point, cond) -> float:
    """log(pi/q); +inf encodes a zero proposal density at a positive-target point."""
    lp = target.eval_log(point)
    lq = proposal.log_density(point, cond)
    if lq == -math.inf:
        return -math.inf if lp == -math.inf else math.inf
    return lp - lq


def _select(log_weights: np.ndarray, rng: RandomStream) -> int:
    m = np.max(log_weights)
    if m == -math.inf:
        raise ValueError("all candidate weights are zero")
    w = np.exp(log_weights - m)
    return rng.choice(len(w), p=w / w.sum())


def mtm_step(state, target: LogTarget, proposal: Proposal, N: int, rng: RandomStream):
    """Multiple-try Metropolis with a state-conditional proposal.

    Draws N tries from q(.|state), selects one by importance weight, draws
    N-1 auxiliary points from q(.|selected), and accepts with
    min[1, sum w(tries) / sum w(aux)].  Returns (point, accepted, alpha, info).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    state = np.asarray(state, dtype=float)
    tries = [np.asarray(proposal.sample(rng, state), dtype=float) for _ in range(N)]
    log_w = np.array([_log_weight(target, proposal, th, state) for th in tries])
    if np.all(log_w == -math.inf):
        # zero-weight candidate set: forced rejection, recorded
        return state, False, 0.0, {"zero_weight_set": True}
    j = _select(log_w, rng)
    sel = tries[j]

    aux = [np.asarray(proposal.sample(rng, sel), dtype=float) for _ in range(N - 1)]
    log_w_aux = np.array(
        [_log_weight(target, proposal, v, sel) for v in aux]
        + [_log_weight(target, proposal, state, sel)]
    )
    if np.any(log_w_aux == math.inf):
        # q(v | selected) = 0 at a positive-target auxiliary: denominator
        # infinite, alpha = 0 (logged)
        alpha = 0.0
        info = {"infinite_aux_weight": True}
    else:
        num = _logsumexp(log_w)
        den = _logsumexp(log_w_aux)
        alpha = min(1.0, math.exp(min(num - den, 0.0)))
        info = {}
    u = rng.uniform()
    if u <= alpha:
        return sel, True, alpha, info
    return state, False, alpha, info


def _logsumexp(a: np.ndarray) -> float:
    m = np.max(a)
    if m == -math.inf:
        return -math.inf
    return float(m + np.log(np.sum(np.exp(a - m))))


def imtm_step(state, target: LogTarget, proposal: Proposal, N: int, rng: RandomStream):
    """Independent MTM: auxiliary points are the unselected tries.

    alpha = min[1, Zhat1/Zhat2] where Zhat1 averages all try weights and
    Zhat2 replaces the selected try's weight with the current state's.
    Returns (point, accepted, alpha, info).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    state = np.asarray(state, dtype=float)
    tries = [np.asarray(proposal.sample(rng, None), dtype=float) for _ in range(N)]
    log_w = np.array([_log_weight(target, proposal, th, None) for th in tries])
    if np.all(log_w == -math.inf):
        return state, False, 0.0, {"zero_weight_set": True}
    j = _select(log_w, rng)
    log_w_state = _log_weight(target, proposal, state, None)
    others = np.delete(log_w, j)
    log_z1 = _logsumexp(log_w)
    log_z2 = _logsumexp(np.append(others, log_w_state))
    alpha = min(1.0, math.exp(min(log_z1 - log_z2, 0.0)))
    u = rng.uniform()
    if u <= alpha:
        return tries[j], True, alpha, {}
    return state, False, alpha, {}


def imtm2_step(
    state,
    z_prev: float,
    target: LogTarget,
    proposal: Proposal,
    N: int,
    rng: RandomStream,
):
    """I-MTM2: the previous iteration's normalizer is recycled.

    alpha = min[1, Zhat'/Zhat_{t-1}]; the accepted normalizer is carried
    forward.  Returns (point, z_new, accepted, alpha).
    """
    if not (z_prev > 0):
        raise ValueError("invalid carried normalizer")
    state = np.asarray(state, dtype=float)
    cand_streams = rng.split(N)
    tries = [np.asarray(proposal.sample(s, None), dtype=float) for s in cand_streams]
    log_w = np.array([_log_weight(target, proposal, th, None) for th in tries])
    if np.all(log_w == -math.inf):
        return state, z_prev, False, 0.0
    j = _select(log_w, rng)
    log_z_new = _logsumexp(log_w) - math.log(N)
    alpha = min(1.0, math.exp(min(log_z_new - math.log(z_prev), 0.0)))
    u = rng.uniform()
    if u <= alpha:
        return tries[j], math.exp(log_z_new), True, alpha
    return state, z_prev, False, alpha


def gms_step(
    set_prev: WeightedCandidateSet,
    z_prev: float,
    target: LogTarget,
    proposal: Proposal,
    N: int,
    rng: RandomStream,
):
    """Group Metropolis sampling: accept or repeat the whole weighted set.

    Returns (set, z, accepted).
    """
    if not (z_prev > 0):
        raise ValueError("invalid carried normalizer")
    tries = np.array(
        [np.asarray(proposal.sample(rng, None), dtype=float) for _ in range(N)]
    )
    lp = target.log_many(tries)
    lq = np.array([proposal.log_density(th, None) for th in tries])
    log_w = lp - lq
    log_z_new = _logsumexp(log_w) - math.log(N)
    alpha = min(1.0, math.exp(min(log_z_new - math.log(z_prev), 0.0)))
    u = rng.uniform()
    if u <= alpha:
        new_set = WeightedCandidateSet(candidates=tries, weights=np.exp(log_w))
        return new_set, math.exp(log_z_new), True
    return set_prev, z_prev, False


def gms_estimate(sets: list, g, burn_in: int = 0) -> float:
    """Recycling estimator: per-iteration self-normalized averages, then a plain mean."""
    vals = []
    for s in sets[burn_in:]:
        wbar = s.normalized()
        vals.append(float(np.sum(wbar * np.array([g(c) for c in s.candidates]))))
    return float(np.mean(vals))


def gms_recover_chain(sets: list, rng: RandomStream) -> np.ndarray:
    """Resample once per changed set; recovers an I-MTM2-distributed chain."""
    states = []
    prev = None
    state = None
    for s in sets:
        if prev is None or s is not prev:
            k = rng.choice(len(s.weights), p=s.normalized())
            state = s.candidates[k]
        states.append(state)
        prev = s
    return np.array(states)


def ensemble_selection_probs(state, tries, target: LogTarget, proposal: Proposal):
    """Selection probabilities over {tries} U {state}, each weighted by pi/q."""
    pts = list(tries) + [np.asarray(state, dtype=float)]
    log_w = np.array([_log_weight(target, proposal, p, None) for p in pts])
    m = np.max(log_w)
    if m == -math.inf:
        raise ValueError("all ensemble weights are zero")
    w = np.exp(log_w - m)
    return w / w.sum()


def ensemble_step(state, target: LogTarget, proposal: Proposal, N: int, rng: RandomStream):
    """Ensemble MCMC: next state drawn from tries plus the previous state."""
    state = np.asarray(state, dtype=float)
    tries = [np.asarray(proposal.sample(rng, None), dtype=float) for _ in range(N)]
    probs = ensemble_selection_probs(state, tries, target, proposal)
    j = rng.choice(N + 1, p=probs)
    return (tries[j] if j < N else state), j


def _drm_log_rho(a, b, c, target, q1, q2):
    """log rho(a, b | c) = log[pi(a) q1(c|a) (1 - alpha1(c, a)) q2(b | a, c)]."""
    lp_a = target.eval_log(a)
    lq1 = q1.log_density(c, a)
    lq2 = q2.log_density(b, (a, c))
    if -math.inf in (lp_a, lq1, lq2):
        return -math.inf
    # alpha1(c, a): acceptance of candidate c proposed from state a
    lp_c = target.eval_log(c)
    lq1_back = q1.log_density(a, c)
    if lp_c == -math.inf or lq1_back == -math.inf:
        alpha1 = 0.0
    else:
        alpha1 = min(1.0, math.exp(min((lp_c + lq1_back) - (lp_a + lq1), 0.0)))
    if alpha1 >= 1.0:
        return -math.inf
    return lp_a + lq1 + math.log1p(-alpha1) + lq2


def drm_step(state, target: LogTarget, q1: Proposal, q2: Proposal, rng: RandomStream):
    """Delayed-rejection Metropolis with two acceptance stages.

    ``q2.sample(rng, (state, first_candidate))`` and
    ``q2.log_density(x, (state, first_candidate))`` condition on both the
    current state and the rejected first candidate.  Returns
    (point, stage, info) with stage in {1, 2, 'reject'}.
    """
    state = np.asarray(state, dtype=float)
    cand1 = np.asarray(q1.sample(rng, state), dtype=float)
    alpha1 = mh_alpha(state, cand1, target, q1)
    u1 = rng.uniform()
    if u1 <= alpha1:
        return cand1, 1, {"alpha1": alpha1}

    cand2 = np.asarray(q2.sample(rng, (state, cand1)), dtype=float)
    log_num = _drm_log_rho(cand2, state, cand1, target, q1, q2)
    log_den = _drm_log_rho(state, cand2, cand1, target, q1, q2)
    if log_den == -math.inf:
        # zero denominator with nonzero numerator: accept by convention
        alpha2 = 1.0 if log_num > -math.inf else 0.0
        info = {"alpha1": alpha1, "alpha2": alpha2, "degenerate_rho": True}
    else:
        alpha2 = min(1.0, math.exp(min(log_num - log_den, 0.0)))
        info = {"alpha1": alpha1, "alpha2": alpha2}
    u2 = rng.uniform()
    if u2 <= alpha2:
        return cand2, 2, info
    return state, "reject", info
