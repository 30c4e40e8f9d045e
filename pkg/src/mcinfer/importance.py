"""Importance weighting, MIS schemes, estimators, ESS, proper weighting, group IS."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import LogTarget, ParticleSet, Proposal, RandomStream

__all__ = [
    "GroupSummary",
    "is_weights",
    "mis_weights",
    "unnormalized_estimate",
    "self_normalized_estimate",
    "ess_is",
    "resample_one",
    "group_summarize",
    "group_estimate",
    "pearson_chi2_1d",
    "optimal_proposal_density_1d",
    "weight_degeneracy_flag",
]


@dataclass
class GroupSummary:
    """A resampled summary point carrying the group's proper weight M * Zhat."""

    point: np.ndarray
    weight: float
    group_size: int
    z_hat: float

    def __post_init__(self):
        if not math.isclose(self.weight, self.group_size * self.z_hat, rel_tol=1e-12):
            raise ValueError("summary weight must equal group_size * z_hat")


def is_weights(points, target: LogTarget, proposal: Proposal) -> ParticleSet:
    """Standard importance weights w = pi / q (computed via log differences)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lp = target.log_many(points)
    lq = np.array([proposal.log_density(p, None) for p in points])
    if np.any(lq == -math.inf):
        raise ValueError("sample outside proposal support")
    return ParticleSet(points=points, weights=np.exp(lp - lq))


def mis_weights(points, proposals: Sequence[Proposal], target: LogTarget, scheme: str) -> ParticleSet:
    """Multiple importance sampling weights, one point per proposal.

    ``scheme='sMIS'`` uses each point's own proposal in the denominator;
    ``'DM'`` uses the equal-weight mixture of all proposals.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(points) != len(proposals):
        raise ValueError("one point per proposal required")
    lp = target.log_many(points)
    if scheme == "sMIS":
        lq = np.array([q.log_density(p, None) for p, q in zip(points, proposals)])
    elif scheme == "DM":
        n = len(proposals)
        lq = np.empty(n)
        for m, p in enumerate(points):
            comps = np.array([q.log_density(p, None) for q in proposals])
            cmax = comps.max()
            if cmax == -math.inf:
                lq[m] = -math.inf
            else:
                lq[m] = cmax + math.log(np.mean(np.exp(comps - cmax)))
    else:
        raise ValueError(f"unknown MIS scheme {scheme!r}")
    if np.any(lq == -math.inf):
        raise ValueError("sample outside proposal support")
    return ParticleSet(points=points, weights=np.exp(lp - lq))


def unnormalized_estimate(ps: ParticleSet, g: Callable, Z: float) -> float:
    """(1/(M Z)) sum w_m g(theta_m); requires the true normalizer Z."""
    if not (Z > 0):
        raise ValueError("Z must be positive")
    gv = np.array([g(p) for p in ps.points])
    return float(np.sum(ps.weights * gv) / (len(ps) * Z))


def self_normalized_estimate(ps: ParticleSet, g: Callable) -> float:
    """sum w_m g(theta_m) / sum w_m."""
    s = float(np.sum(ps.weights))
    if s <= 0:
        raise ValueError("degenerate weights")
    gv = np.array([g(p) for p in ps.points])
    return float(np.sum(ps.weights * gv) / s)


def ess_is(ps: ParticleSet, variant: str = "inv_sum_sq") -> float:
    """Effective sample size of a weighted set; always in [1, M]."""
    wbar = ps.normalized()
    if variant == "inv_sum_sq":
        return float(1.0 / np.sum(wbar ** 2))
    if variant == "inv_max":
        return float(1.0 / np.max(wbar))
    raise ValueError(f"unknown ESS variant {variant!r}")


def resample_one(ps: ParticleSet, rng: RandomStream):
    """Draw one particle by weight; its proper weight is Zhat = mean weight."""
    wbar = ps.normalized()
    k = rng.choice(len(ps), p=wbar)
    return ps.points[k].copy(), ps.z_hat


def group_summarize(groups: Sequence[ParticleSet], rng: RandomStream) -> list[GroupSummary]:
    out = []
    for ps in groups:
        if len(ps) == 0:
            raise ValueError("empty group")
        point, z_hat = resample_one(ps, rng)
        out.append(GroupSummary(point=point, weight=len(ps) * z_hat,
                                group_size=len(ps), z_hat=z_hat))
    return out


def group_estimate(summaries: Sequence[GroupSummary], g: Callable) -> float:
    w = np.array([s.weight for s in summaries])
    if w.sum() <= 0:
        raise ValueError("degenerate group weights")
    gv = np.array([g(s.point) for s in summaries])
    return float(np.sum(w * gv) / w.sum())


def pearson_chi2_1d(target_norm: Callable, proposal_norm: Callable, grid) -> float:
    """Trapezoid quadrature of the Pearson divergence (pi - q)^2 / q on a grid.

    Both densities must be normalized; q must be positive wherever pi is.
    """
    grid = np.asarray(grid, dtype=float)
    p = np.array([target_norm(x) for x in grid])
    q = np.array([proposal_norm(x) for x in grid])
    bad = (q <= 0) & (p > 0)
    if np.any(bad):
        raise ValueError("proposal vanishes where the target is positive")
    integrand = np.where(q > 0, (p - q) ** 2 / np.where(q > 0, q, 1.0), 0.0)
    return float(np.trapz(integrand, grid))


def optimal_proposal_density_1d(target_norm: Callable, g: Callable, grid) -> np.ndarray:
    """Normalized |g| * pi on the grid: the variance-optimal IS proposal."""
    grid = np.asarray(grid, dtype=float)
    dens = np.array([abs(g(x)) * target_norm(x) for x in grid])
    total = np.trapz(dens, grid)
    if total <= 0:
        raise ValueError("integral of |g| pi is zero")
    return dens / total


def weight_degeneracy_flag(ps: ParticleSet, share: float = 0.99) -> bool:
    """True when a single weight carries more than ``share`` of the total mass."""
    wbar = ps.normalized()
    return bool(np.max(wbar) > share)
