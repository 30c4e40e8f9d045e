"""Classic MCMC kernels: MH, Gibbs scans, data augmentation, slice, hit-and-run, ADS.

All step functions draw candidate randomness first and the accept/reject
uniform last, so that seed-matched equivalence across kernels holds whenever
the candidate generation coincides.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import LogTarget, Proposal, RandomStream

__all__ = [
    "ChainTrace",
    "ScanPolicy",
    "mh_alpha",
    "mh_step",
    "barker_alpha",
    "run_chain",
    "trace_estimate",
    "thin",
    "gibbs_step",
    "mh_within_gibbs_step",
    "da_step",
    "slice_step_1d",
    "hit_and_run_step",
    "ads_step",
    "make_mh_kernel",
    "trace_to_csv",
    "trace_to_jsonl",
]


@dataclass
class ChainTrace:
    """Ordered chain states with acceptance flags and per-iteration metadata."""

    states: np.ndarray
    accepted: np.ndarray
    burn_in: int = 0
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.accepted = np.asarray(self.accepted, dtype=bool)
        if len(self.states) != len(self.accepted):
            raise ValueError("states and accepted must have equal length")
        if not (0 <= self.burn_in < len(self.states)):
            raise ValueError("burn_in must be < number of states")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted))


@dataclass
class ScanPolicy:
    """Coordinate scan order for Gibbs-type samplers.

    ``systematic`` visits 1..D cyclically; ``symmetric`` ascends then
    descends with period 2D-2; ``random`` draws uniformly on {1..D}.
    """

    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("systematic", "symmetric", "random"):
            raise ValueError(f"unknown scan kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def index_at(self, t: int, rng: Optional[RandomStream] = None) -> int:
        """0-based coordinate for 1-based step counter ``t``."""
        d = self.dim
        if self.kind == "systematic":
            return (t - 1) % d
        if self.kind == "symmetric":
            if d == 1:
                return 0
            period = 2 * d - 2
            r = (t - 1) % period
            return r if r < d else period - r
        if rng is None:
            raise ValueError("random scan needs an rng")
        return int(rng.integers(0, d))


def mh_alpha(state, candidate, target: LogTarget, proposal: Proposal) -> float:
    """Metropolis-Hastings acceptance probability, computed in log domain."""
    lp_new = target.eval_log(np.asarray(candidate))
    lp_old = target.eval_log(np.asarray(state))
    if lp_new == -math.inf and lp_old == -math.inf:
        return 0.0  # broken support: reject
    lq_fwd = proposal.log_density(np.asarray(candidate), np.asarray(state))
    lq_bwd = proposal.log_density(np.asarray(state), np.asarray(candidate))
    if lq_fwd == -math.inf:
        raise ValueError("invalid proposal sample")
    log_ratio = (lp_new + lq_bwd) - (lp_old + lq_fwd)
    return float(min(1.0, math.exp(min(log_ratio, 0.0))))


def mh_step(state, target: LogTarget, proposal: Proposal, rng: RandomStream):
    """One MH transition.  Returns (point, accepted, alpha)."""
    state = np.asarray(state, dtype=float)
    candidate = np.asarray(proposal.sample(rng, state), dtype=float)
    alpha = mh_alpha(state, candidate, target, proposal)
    u = rng.uniform()
    if u <= alpha:
        return candidate, True, alpha
    return state, False, alpha


def barker_alpha(state, candidate, target: LogTarget, proposal: Proposal) -> float:
    """Barker acceptance rule pi q / (pi q + pi q), in (0, 1)."""
    state = np.asarray(state, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    a = target.eval_log(candidate) + proposal.log_density(state, candidate)
    b = target.eval_log(state) + proposal.log_density(candidate, state)
    if a == -math.inf and b == -math.inf:
        raise ValueError("degenerate ratio")
    m = max(a, b)
    return float(math.exp(a - m) / (math.exp(a - m) + math.exp(b - m)))


def run_chain(kernel, init, T: int, burn_in: int, rng: RandomStream) -> ChainTrace:
    """Run ``kernel(state, rng) -> (state, accepted, aux_dict)`` for T iterations."""
    if not T > burn_in >= 0:
        raise ValueError("need T > burn_in >= 0")
    state = np.asarray(init, dtype=float)
    states = np.empty((T, state.size))
    accepted = np.empty(T, dtype=bool)
    aux_rows: dict[str, list] = {}
    for t in range(T):
        try:
            state, acc, aux = kernel(state, rng)
        except Exception as exc:
            raise RuntimeError(f"kernel failed at iteration {t + 1}: {exc}") from exc
        states[t] = state
        accepted[t] = acc
        for k, v in aux.items():
            aux_rows.setdefault(k, []).append(v)
    aux = {k: np.asarray(v) for k, v in aux_rows.items()}
    return ChainTrace(states=states, accepted=accepted, burn_in=burn_in, aux=aux)


def trace_estimate(trace: ChainTrace, g: Callable[[np.ndarray], float]) -> float:
    """Post-burn-in ergodic average (1/(T-T_b)) sum g(state_t)."""
    kept = trace.states[trace.burn_in:]
    return float(np.mean([g(s) for s in kept]))


def thin(trace: ChainTrace, K: int) -> ChainTrace:
    """Keep every K-th post-burn-in state; resulting burn_in is 0."""
    if K < 1:
        raise ValueError("K must be >= 1")
    idx = np.arange(trace.burn_in, len(trace.states), K)
    if len(idx) == 0:
        raise ValueError("thinning left no states")
    aux = {k: v[idx] for k, v in trace.aux.items() if len(v) == len(trace.states)}
    return ChainTrace(
        states=trace.states[idx], accepted=trace.accepted[idx], burn_in=0, aux=aux
    )


def make_mh_kernel(target: LogTarget, proposal: Proposal):
    def kernel(state, rng):
        new, acc, alpha = mh_step(state, target, proposal, rng)
        return new, acc, {"alpha": alpha}

    return kernel


def gibbs_step(
    state,
    conditional_sampler: Callable[[int, np.ndarray, RandomStream], float],
    policy: ScanPolicy,
    t: int,
    rng: RandomStream,
):
    """Redraw exactly the coordinate selected by ``policy`` at step ``t``.

    ``conditional_sampler(d, state, rng)`` samples coordinate d from its full
    conditional given the rest of ``state``.
    """
    state = np.asarray(state, dtype=float).copy()
    if state.size != policy.dim:
        raise ValueError("state dimension does not match policy")
    d = policy.index_at(t, rng)
    try:
        state[d] = conditional_sampler(d, state, rng)
    except Exception as exc:
        raise RuntimeError(f"conditional sampler failed at coordinate {d}: {exc}") from exc
    return state


def _conditional_target_1d(target: LogTarget, state: np.ndarray, d: int) -> LogTarget:
    def eval_log(th):
        x = state.copy()
        x[d] = float(np.asarray(th).ravel()[0])
        return target.eval_log(x)

    return LogTarget(dim=1, eval_log=eval_log)


def mh_within_gibbs_step(
    state,
    target: LogTarget,
    coordinate_proposals: Sequence[Proposal],
    T_MH: int,
    policy: ScanPolicy,
    t: int,
    rng: RandomStream,
):
    """Update one coordinate with T_MH inner MH steps on its full conditional.

    Returns (point, info) where info records the coordinate and the inner
    acceptance count.
    """
    if T_MH < 1:
        raise ValueError("T_MH must be >= 1")
    state = np.asarray(state, dtype=float).copy()
    d = policy.index_at(t, rng)
    cond = _conditional_target_1d(target, state, d)
    prop = coordinate_proposals[d]
    x = np.array([state[d]])
    n_acc = 0
    alpha = 0.0
    for _ in range(T_MH):
        x, acc, alpha = mh_step(x, cond, prop, rng)
        n_acc += int(acc)
    state[d] = x[0]
    return state, {"coordinate": d, "inner_accepts": n_acc, "alpha": alpha}


def da_step(latents: list, state, model, K: int, rng: RandomStream):
    """Data-augmentation sweep: theta from the K-component mixture, then K fresh latents.

    ``model`` must provide ``sample_theta_given_latent(z, rng)`` and
    ``sample_latent_given_theta(theta, rng)``.  Returns (theta, latents, info).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(latents) != K:
        raise ValueError("need exactly K latents")
    k = int(rng.integers(0, K))  # mixture weights are uniform 1/K
    theta = model.sample_theta_given_latent(latents[k], rng)
    try:
        new_latents = [model.sample_latent_given_theta(theta, rng) for _ in range(K)]
    except Exception as exc:
        raise RuntimeError(f"latent sampler failed: {exc}") from exc
    return theta, new_latents, {"component": k}


def slice_step_1d(
    state: float,
    target: LogTarget,
    rng: RandomStream,
    widen: float = 1.0,
    max_steps: int = 64,
) -> float:
    """One slice-sampling transition for a 1-D target.

    Draws the level z ~ U(0, pi(state)) and then samples the slice
    {x : pi(x) >= z} by stepping out with width ``widen`` and binary
    shrinkage.  More than ``max_steps`` expansions on a side raises
    "unbounded slice".
    """
    x0 = float(np.asarray(state).ravel()[0])
    lp0 = target.eval_log(np.array([x0]))
    if lp0 == -math.inf:
        raise ValueError("state has zero density")
    # log-level of the slice: log z = log pi(x0) + log u
    log_z = lp0 + math.log(rng.uniform())

    left = x0 - widen * rng.uniform()
    right = left + widen
    steps = 0
    while target.eval_log(np.array([left])) >= log_z:
        left -= widen
        steps += 1
        if steps > max_steps:
            raise ValueError("unbounded slice")
    steps = 0
    while target.eval_log(np.array([right])) >= log_z:
        right += widen
        steps += 1
        if steps > max_steps:
            raise ValueError("unbounded slice")

    while True:
        x1 = left + (right - left) * rng.uniform()
        if target.eval_log(np.array([x1])) >= log_z:
            return x1
        if x1 < x0:
            left = x1
        else:
            right = x1


def _line_slice_sample(
    log_density_1d: Callable[[float], float],
    rng: RandomStream,
    widen: float = 1.0,
    max_steps: int = 64,
) -> float:
    """Exact 1-D slice draw for an arbitrary log-density along a line, from 0."""
    t = LogTarget(dim=1, eval_log=lambda v: log_density_1d(float(v[0])))
    return slice_step_1d(0.0, t, rng, widen=widen, max_steps=max_steps)


def _line_metropolis_sample(
    log_density_1d: Callable[[float], float],
    rng: RandomStream,
    n_steps: int = 50,
    step_scale: float = 1.0,
) -> float:
    """Metropolised 1-D sampler along a line, started at 0."""
    lam = 0.0
    lp = log_density_1d(0.0)
    for _ in range(n_steps):
        cand = lam + step_scale * rng.normal()
        lp_cand = log_density_1d(cand)
        if lp_cand == -math.inf and lp == -math.inf:
            continue
        if math.log(rng.uniform()) <= lp_cand - lp:
            lam, lp = cand, lp_cand
    return lam


def hit_and_run_step(
    state,
    target: LogTarget,
    direction_proposal: Optional[Proposal],
    rng: RandomStream,
    line_sampler: str = "slice",
    n_line_steps: int = 50,
    step_scale: float = 1.0,
):
    """Move along a random direction with lambda sampled proportional to pi.

    With ``line_sampler='slice'`` the draw along the line is exact (the
    always-accept contract holds); ``'metropolis'`` runs an ``n_line_steps``
    Metropolised line sampler instead.
    """
    state = np.asarray(state, dtype=float)
    if direction_proposal is not None:
        direction = np.asarray(direction_proposal.sample(rng, None), dtype=float)
    else:
        direction = rng.normal(size=state.size)
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise ValueError("zero direction")
    direction = direction / norm

    def line_logpdf(lam: float) -> float:
        return target.eval_log(state + lam * direction)

    if line_sampler == "slice":
        lam = _line_slice_sample(line_logpdf, rng)
    elif line_sampler == "metropolis":
        lam = _line_metropolis_sample(line_logpdf, rng, n_line_steps, step_scale)
    else:
        raise ValueError(f"unknown line sampler {line_sampler!r}")
    return state + lam * direction


def ads_step(
    support: np.ndarray,
    target: LogTarget,
    mode: str,
    rng: RandomStream,
    line_sampler: str = "slice",
):
    """Adaptive direction sampling: replace one support point.

    ``support`` is a (K, D) array with K > D.  ``mode`` selects the scheme:
    snooker (lambda=-1, direction to a second support point), parallel
    (lambda=0, difference of two others), hitrun (random direction) or gibbs
    (axis-aligned direction).  The move length r is drawn proportional to
    pi(theta_c + r(v + lambda theta_c)) |1 + r lambda|^(D-1) with a 1-D line
    sampler (exact slice by default), which approximates the exact ADS step.
    """
    support = np.atleast_2d(np.asarray(support, dtype=float)).copy()
    K, D = support.shape
    if K <= D:
        raise ValueError("support too small")
    i = int(rng.integers(0, K))
    theta_c = support[i].copy()

    if mode == "snooker":
        others = [j for j in range(K) if j != i]
        a = others[int(rng.integers(0, len(others)))]
        vartheta = support[a].copy()
        lam = -1.0
    elif mode == "parallel":
        others = [j for j in range(K) if j != i]
        a = others[int(rng.integers(0, len(others)))]
        rest = [j for j in others if j != a]
        b = rest[int(rng.integers(0, len(rest)))]
        vartheta = support[a] - support[b]
        lam = 0.0
    elif mode == "hitrun":
        v = rng.normal(size=D)
        vartheta = v / np.linalg.norm(v)
        lam = 0.0
    elif mode == "gibbs":
        d = int(rng.integers(0, D))
        vartheta = np.zeros(D)
        vartheta[d] = theta_c[d] if theta_c[d] != 0 else 1.0
        lam = 0.0
    else:
        raise ValueError(f"unknown ADS mode {mode!r}")

    direction = vartheta + lam * theta_c
    if np.linalg.norm(direction) == 0:
        raise ValueError("zero direction")

    def line_logpdf(r: float) -> float:
        lp = target.eval_log(theta_c + r * direction)
        if lp == -math.inf:
            return -math.inf
        jac = abs(1.0 + r * lam)
        if jac == 0:
            return -math.inf
        return lp + (D - 1) * math.log(jac)

    if line_sampler == "slice":
        r = _line_slice_sample(line_logpdf, rng)
    else:
        r = _line_metropolis_sample(line_logpdf, rng)
    support[i] = theta_c + r * direction
    return support


def trace_to_csv(trace: ChainTrace, path) -> None:
    """One record per iteration: index, state, accepted flag, aux columns."""
    dim = trace.states.shape[1]
    aux_keys = sorted(trace.aux.keys())
    with open(path, "w") as fh:
        cols = ["iteration"] + [f"x{i}" for i in range(dim)] + ["accepted"] + aux_keys
        fh.write(",".join(cols) + "\n")
        for t in range(len(trace)):
            row = [str(t + 1)]
            row += [repr(float(v)) for v in trace.states[t]]
            row.append(str(int(trace.accepted[t])))
            row += [repr(float(trace.aux[k][t])) for k in aux_keys]
            fh.write(",".join(row) + "\n")


def trace_to_jsonl(trace: ChainTrace, path) -> None:
    with open(path, "w") as fh:
        for t in range(len(trace)):
            rec = {
                "iteration": t + 1,
                "state": [float(v) for v in trace.states[t]],
                "accepted": bool(trace.accepted[t]),
                "aux": {k: float(v[t]) for k, v in trace.aux.items()},
            }
            fh.write(json.dumps(rec) + "\n")
