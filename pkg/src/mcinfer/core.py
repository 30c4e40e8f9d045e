"""Shared domain types, deterministic randomness, plain Monte Carlo and rejection sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "RandomStream",
    "seeded_stream",
    "split",
    "LogTarget",
    "Proposal",
    "WeightedSample",
    "ParticleSet",
    "mc_estimate",
    "rejection_sample",
    "theoretical_rs_acceptance",
    "check_factorization",
]


class RandomStream:
    """Seedable deterministic random source.

    Wraps a counter-based numpy generator (Philox).  Two streams built from
    the same seed produce identical draw sequences; ``split`` derives
    statistically independent child streams whose identities are stable
    across runs (same seed => same children).
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seedseq = seed
        else:
            self._seedseq = np.random.SeedSequence(int(seed))
        self.gen = np.random.Generator(np.random.Philox(self._seedseq))

    @property
    def key(self) -> tuple:
        """Stable identity of this stream (entropy, spawn path)."""
        return (self._seedseq.entropy, tuple(self._seedseq.spawn_key))

    def split(self, n: int) -> list["RandomStream"]:
        """Derive ``n`` independent child streams; does not disturb this stream."""
        return [RandomStream(ss) for ss in self._seedseq.spawn(n)]

    # thin conveniences over the numpy generator
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def choice(self, n: int, p=None) -> int:
        """Draw one index in ``{0..n-1}`` with probabilities ``p`` via a single uniform."""
        u = self.gen.uniform()
        if p is None:
            return min(int(u * n), n - 1)
        cp = np.cumsum(p)
        if cp[-1] <= 0:
            raise ValueError("degenerate weights")
        return int(np.searchsorted(cp / cp[-1], u, side="right").clip(0, n - 1))


def seeded_stream(seed: int) -> RandomStream:
    return RandomStream(seed)


def split(stream: RandomStream, n: int) -> list[RandomStream]:
    return stream.split(n)


@dataclass
class LogTarget:
    """Unnormalized log-density with optional gradient and sequential factorization.

    ``eval_log`` maps a point in R^dim to log pi (``-inf`` encodes zero
    density / out of support).  ``eval_log_batch``, when given, evaluates an
    (M, dim) array of points at once and returns shape (M,).  ``factors``
    is a sequence of conditional log-factors ``f_d(x_d, x_prev)`` whose sum
    equals ``eval_log`` on the factorized support (``x_prev`` is None for d=0).
    """

    dim: int
    eval_log: Callable[[np.ndarray], float]
    grad_log: Optional[Callable[[np.ndarray], np.ndarray]] = None
    factors: Optional[Sequence[Callable]] = None
    eval_log_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")

    def log_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate eval_log on an (M, dim) batch, vectorized when possible."""
        points = np.atleast_2d(points)
        if self.eval_log_batch is not None:
            return np.asarray(self.eval_log_batch(points), dtype=float)
        return np.array([self.eval_log(p) for p in points], dtype=float)


@dataclass
class Proposal:
    """Sampler plus log-density evaluator, optionally conditioned on a point."""

    dim: int
    sample: Callable[[RandomStream, Optional[np.ndarray]], np.ndarray]
    log_density: Callable[[np.ndarray, Optional[np.ndarray]], float]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")


@dataclass
class WeightedSample:
    point: np.ndarray
    weight: float

    def __post_init__(self):
        if not (self.weight >= 0.0 and math.isfinite(self.weight)):
            raise ValueError("weight must be non-negative and finite")


@dataclass
class ParticleSet:
    """Points with non-negative unnormalized weights and the running normalizer.

    ``z_hat`` is always the mean of the current weights; it is recomputed on
    every access so mutation of ``weights`` cannot leave it stale.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or len(self.weights) != len(self.points):
            raise ValueError("one weight per point required")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be non-negative and finite")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def z_hat(self) -> float:
        return float(np.mean(self.weights))

    def normalized(self) -> np.ndarray:
        s = float(np.sum(self.weights))
        if s <= 0:
            raise ValueError("degenerate weights")
        return self.weights / s

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            dim = self.points.shape[1]
            fh.write(",".join(f"x{i}" for i in range(dim)) + ",weight\n")
            for p, w in zip(self.points, self.weights):
                fh.write(",".join(repr(float(v)) for v in p) + f",{w!r}\n")


def mc_estimate(samples, g: Callable[[np.ndarray], float]) -> float:
    """Plain Monte Carlo average (1/M) sum g(x_m)."""
    samples = list(samples)
    if len(samples) == 0:
        raise ValueError("no samples")
    return float(np.mean([g(np.asarray(s)) for s in samples]))


def rejection_sample(
    target: LogTarget,
    proposal: Proposal,
    log_C: float,
    M: int,
    rng: RandomStream,
) -> tuple[np.ndarray, int]:
    """Draw exactly M accepted points via rejection sampling.

    ``log_C`` must satisfy log_C >= sup(log pi - log q); a drawn point that
    violates the bound aborts with ValueError rather than being clipped.
    Returns (points, attempts).
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    accepted = []
    attempts = 0
    while len(accepted) < M:
        theta = proposal.sample(rng, None)
        attempts += 1
        log_ratio = target.eval_log(theta) - proposal.log_density(theta, None) - log_C
        if log_ratio > 1e-12:
            raise ValueError("bound violated")
        u = rng.uniform()
        if u <= math.exp(min(log_ratio, 0.0)):
            accepted.append(np.asarray(theta, dtype=float))
    return np.array(accepted), attempts


def theoretical_rs_acceptance(z_target: float, z_proposal: float, C: float) -> float:
    """Acceptance probability Z_pi / (C Z_q) of rejection sampling."""
    if z_target <= 0 or z_proposal <= 0 or C <= 0:
        raise ValueError("all inputs must be positive")
    return z_target / (C * z_proposal)


def check_factorization(target: LogTarget, points: np.ndarray, rtol: float = 1e-10) -> bool:
    """Verify exp(sum of factor logs) == exp(eval_log) on the given test points."""
    if target.factors is None:
        raise ValueError("target has no factors")
    for x in np.atleast_2d(points):
        total = 0.0
        prev = None
        for d, fac in enumerate(target.factors):
            total += fac(x[d], prev)
            prev = x[d]
        direct = target.eval_log(x)
        if math.isinf(total) and math.isinf(direct):
            continue
        if not math.isclose(total, direct, rel_tol=rtol, abs_tol=1e-12):
            return False
    return True
