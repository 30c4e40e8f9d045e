"""Adaptive Metropolis, adaptive Gaussian-mixture MH, ARMS / IA2RMS, FUSS."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import LogTarget, RandomStream

__all__ = [
    "AdaptiveState",
    "am_step",
    "optimal_scale",
    "GaussianMixture1D",
    "agm_mh_step",
    "PiecewiseProposal",
    "arms_build",
    "arms_step",
    "ia2rms_step",
    "fuss_build",
]

_TAIL_LOG_MASS_CAP = math.log(1e12)  # relative to the envelope peak


# ---------------------------------------------------------------------------
# Adaptive Metropolis
# ---------------------------------------------------------------------------

@dataclass
class AdaptiveState:
    """Running state of the adaptive Metropolis sampler.

    ``cov_est`` is the proposal shape Sigma_t (already jittered by eps*I);
    ``scale`` is lambda_t, adapted toward the target acceptance rate via
    log lambda_t += gain * (alpha_t - target_ar) with gain t^(-gain_decay).
    """

    mean_est: np.ndarray
    cov_est: np.ndarray
    scale: float = 1.0
    eps: float = 1e-6
    target_ar: float = 0.234
    gain_decay: float = 0.6
    adapt_cov: bool = True
    adapt_scale: bool = True
    t: int = 1
    _m2: np.ndarray = None
    _n: int = 1

    @classmethod
    def initial(cls, state0, cov0=None, **kw) -> "AdaptiveState":
        x = np.atleast_1d(np.asarray(state0, dtype=float))
        d = x.size
        cov0 = np.eye(d) if cov0 is None else np.asarray(cov0, dtype=float)
        st = cls(mean_est=x.copy(), cov_est=cov0, **kw)
        st._m2 = np.zeros((d, d))
        st._n = 1
        return st


def optimal_scale(dim: int) -> float:
    """Asymptotically optimal random-walk scale 2.38^2 / dim."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return 2.38 ** 2 / dim


def am_step(state, adaptive: AdaptiveState, target: LogTarget, rng: RandomStream):
    """One adaptive-Metropolis transition.

    Proposes N(state, lambda * Sigma), applies the symmetric MH rule, then
    updates the covariance recursively (empirical covariance of the chain
    history plus eps*I) and the log-scale.  Returns (point, new_adaptive,
    accepted, alpha).
    """
    x = np.atleast_1d(np.asarray(state, dtype=float))
    d = x.size
    cov = adaptive.scale * adaptive.cov_est
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        L = np.linalg.cholesky(cov + 10 * adaptive.eps * np.eye(d))
    candidate = x + L @ rng.normal(size=d)
    lp_new = target.eval_log(candidate)
    lp_old = target.eval_log(x)
    alpha = min(1.0, math.exp(min(lp_new - lp_old, 0.0)))
    u = rng.uniform()
    new_x = candidate if u <= alpha else x

    new = replace(adaptive)
    new._m2 = adaptive._m2
    new._n = adaptive._n
    if adaptive.adapt_cov:
        # Welford update over chain states theta^(0..t)
        n = adaptive._n + 1
        delta = new_x - adaptive.mean_est
        mean = adaptive.mean_est + delta / n
        m2 = adaptive._m2 + np.outer(delta, new_x - mean)
        emp = m2 / (n - 1)
        cov_est = emp + adaptive.eps * np.eye(d)
        if not np.all(np.isfinite(cov_est)):
            raise ValueError("covariance update produced non-finite entries")
        new.mean_est, new._m2, new._n, new.cov_est = mean, m2, n, cov_est
    if adaptive.adapt_scale:
        gain = adaptive.t ** (-adaptive.gain_decay)
        new.scale = float(adaptive.scale * math.exp(gain * (alpha - adaptive.target_ar)))
    new.t = adaptive.t + 1
    return new_x, new, bool(u <= alpha), alpha


# ---------------------------------------------------------------------------
# Adaptive Gaussian-mixture independent MH
# ---------------------------------------------------------------------------

@dataclass
class GaussianMixture1D:
    """Equally simple 1-D Gaussian mixture proposal with running-moment adaptation."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    counts: np.ndarray = None
    _s: np.ndarray = None
    var_floor: float = 1e-2

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)
        if len(self.weights) == 0:
            raise ValueError("empty mixture")
        self.weights = self.weights / self.weights.sum()
        if self.counts is None:
            # pseudo-counts stabilise the early responsibility updates
            self.counts = np.full(len(self.weights), 5.0)
        if self._s is None:
            self._s = self.counts * self.variances

    def logpdf(self, x: float) -> float:
        z = -0.5 * (x - self.means) ** 2 / self.variances
        comp = np.log(self.weights) - 0.5 * np.log(2 * np.pi * self.variances) + z
        m = comp.max()
        return float(m + np.log(np.sum(np.exp(comp - m))))

    def sample(self, rng: RandomStream) -> float:
        k = rng.choice(len(self.weights), p=self.weights)
        return float(self.means[k] + math.sqrt(self.variances[k]) * rng.normal())

    def update(self, x: float) -> "GaussianMixture1D":
        """Responsibility-weighted running update of counts, means and variances."""
        z = -0.5 * (x - self.means) ** 2 / self.variances
        lr = np.log(self.weights) - 0.5 * np.log(self.variances) + z
        lr -= lr.max()
        r = np.exp(lr)
        r /= r.sum()
        counts = self.counts + r
        delta = x - self.means
        means = self.means + r * delta / counts
        s = self._s + r * delta * (x - means)
        variances = np.maximum(s / counts, self.var_floor)
        return GaussianMixture1D(
            weights=counts / counts.sum(),
            means=means,
            variances=variances,
            counts=counts,
            _s=s,
            var_floor=self.var_floor,
        )


def agm_mh_step(
    state,
    mixture: GaussianMixture1D,
    target: LogTarget,
    t: int,
    T_train: int,
    rng: RandomStream,
):
    """Independent MH with an adaptive Gaussian-mixture proposal.

    The mixture is updated from accepted samples once t >= T_train; the
    adaptation never stops.  Returns (point, mixture, accepted, alpha).
    """
    x = float(np.asarray(state).ravel()[0])
    candidate = mixture.sample(rng)
    log_ratio = (
        target.eval_log(np.array([candidate]))
        + mixture.logpdf(x)
        - target.eval_log(np.array([x]))
        - mixture.logpdf(candidate)
    )
    alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
    u = rng.uniform()
    accepted = u <= alpha
    new_x = candidate if accepted else x
    new_mixture = mixture
    if accepted and t >= T_train:
        new_mixture = mixture.update(new_x)
    return np.array([new_x]), new_mixture, bool(accepted), alpha


# ---------------------------------------------------------------------------
# Piecewise-exponential envelope proposals (ARMS / IA2RMS / FUSS)
# ---------------------------------------------------------------------------

@dataclass
class _Piece:
    lo: float
    hi: float
    w0: float     # W(theta) = w0 + slope * theta
    slope: float
    log_mass: float  # shifted by the envelope peak


@dataclass
class PiecewiseProposal:
    """Piecewise-linear log-envelope W with exact piecewise-exponential sampling.

    ``support`` holds the sorted abscissae and ``values`` the target log at
    them.  Pieces store (already truncated) finite integration bounds and
    shifted log-masses; sampling picks a piece by mass and inverts the
    exponential CDF inside it.
    """

    support: np.ndarray
    values: np.ndarray
    pieces: list
    shift: float
    has_tails: bool
    clipped: bool = False

    def __post_init__(self):
        if np.any(np.diff(self.support) <= 0):
            raise ValueError("support must be strictly sorted")

    @property
    def log_masses(self) -> np.ndarray:
        return np.array([p.log_mass for p in self.pieces])

    @property
    def piece_probs(self) -> np.ndarray:
        lm = self.log_masses
        m = lm.max()
        w = np.exp(lm - m)
        return w / w.sum()

    @property
    def log_total_mass(self) -> float:
        """log of the unnormalized envelope mass (unshifted units)."""
        lm = self.log_masses
        m = lm.max()
        return float(self.shift + m + np.log(np.sum(np.exp(lm - m))))

    def log_envelope(self, theta: float) -> float:
        """The piecewise-linear potential W(theta) (unnormalized log proposal)."""
        th = float(theta)
        if not self.has_tails:
            if th < self.pieces[0].lo or th > self.pieces[-1].hi:
                return -math.inf
        lo_bounds = np.array([p.lo for p in self.pieces])
        k = int(np.searchsorted(lo_bounds, th, side="right") - 1)
        k = min(max(k, 0), len(self.pieces) - 1)
        p = self.pieces[k]
        return p.w0 + p.slope * th

    def log_density(self, theta: float) -> float:
        w = self.log_envelope(theta)
        if w == -math.inf:
            return -math.inf
        # outside the truncated sampling range the density is zero
        if theta < self.pieces[0].lo or theta > self.pieces[-1].hi:
            return -math.inf
        return w - self.log_total_mass

    def sample(self, rng: RandomStream) -> float:
        k = rng.choice(len(self.pieces), p=self.piece_probs)
        p = self.pieces[k]
        u = rng.uniform()
        d = p.hi - p.lo
        s = p.slope
        if abs(s) * d < 1e-12:
            return p.lo + u * d
        if s > 0:
            # invert from the hi side for numerical stability
            return p.hi + math.log(u + (1.0 - u) * math.exp(-s * d)) / s
        return p.lo + math.log(1.0 + u * math.expm1(s * d)) / s

    def with_point(self, theta: float, target_log: Callable[[float], float]):
        """Rebuild with one more support point (ARMS/IA2RMS adaptation)."""
        if np.any(self.support == theta):
            return self
        v = target_log(theta)
        if not math.isfinite(v):
            return self
        sup = np.append(self.support, theta)
        val = np.append(self.values, v)
        order = np.argsort(sup)
        if self.has_tails:
            return arms_build(sup[order], target_log, values=val[order])
        return _pwl_build(sup[order], val[order])


def _line(s1, v1, s2, v2):
    """(w0, slope) of the line through (s1, v1), (s2, v2)."""
    slope = (v2 - v1) / (s2 - s1)
    return v1 - slope * s1, slope


def _segment_log_mass(lo, hi, w0, slope, shift):
    """log integral of exp(w0 + slope*theta - shift) over finite [lo, hi]."""
    c = w0 - shift
    d = hi - lo
    if abs(slope) * d < 1e-12:
        return c + slope * lo + math.log(d)
    a, b = slope * lo, slope * hi
    hi_term, lo_term = max(a, b), min(a, b)
    return c + hi_term + math.log1p(-math.exp(lo_term - hi_term)) - math.log(abs(slope))


def _make_piece(lo, hi, w0, slope, shift):
    return _Piece(lo, hi, w0, slope, _segment_log_mass(lo, hi, w0, slope, shift))


def _truncated_tail(side, bound, w0, slope, shift):
    """Finite piece standing in for a half-infinite tail.

    Returns (piece, clipped).  ``side`` is 'left' for (-inf, bound] or
    'right' for [bound, inf).  A convergent tail below the mass cap keeps
    essentially its full mass; a divergent or over-cap tail is truncated
    where its mass reaches the cap.
    """
    c = w0 - shift
    s = slope
    converges = (side == "left" and s > 0) or (side == "right" and s < 0)
    if converges:
        full_log_mass = c + s * bound - math.log(abs(s))
        if full_log_mass <= _TAIL_LOG_MASS_CAP:
            # beyond this extent only an exp(-45) fraction of the mass remains
            extent = 45.0 / abs(s)
            lo, hi = (bound - extent, bound) if side == "left" else (bound, bound + extent)
            return _make_piece(lo, hi, w0, s, shift), False

    if abs(s) < 1e-300:
        length = math.exp(min(_TAIL_LOG_MASS_CAP - c, 700.0))
        lo, hi = (bound - length, bound) if side == "left" else (bound, bound + length)
        return _make_piece(lo, hi, w0, s, shift), True

    # solve |exp(s*far) - exp(s*bound)| * exp(c) / |s| = cap for the far end
    t0 = s * bound
    q = _TAIL_LOG_MASS_CAP - c + math.log(abs(s))
    diverges = (side == "left" and s <= 0) or (side == "right" and s >= 0)
    if diverges:
        far = float(np.logaddexp(t0, q)) / s
    else:
        # convergent but over the cap: exp(s*far) = exp(t0) - cap term
        far = (t0 + math.log1p(-math.exp(min(q - t0, -1e-16)))) / s
    if side == "left":
        lo, hi = min(far, bound - 1e-12), bound
    else:
        lo, hi = bound, max(far, bound + 1e-12)
    return _make_piece(lo, hi, w0, s, shift), True


def _subdivide(lo, hi, lines, combine):
    """Split [lo, hi] at line intersections; on each part the active line is fixed."""
    cuts = {lo, hi}
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            (c1, s1), (c2, s2) = lines[i], lines[j]
            if s1 != s2:
                x = (c2 - c1) / (s1 - s2)
                if lo < x < hi:
                    cuts.add(x)
    xs = sorted(cuts)
    parts = []
    for a, b in zip(xs[:-1], xs[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        vals = [c + s * mid for (c, s) in lines]
        k = combine(vals)
        parts.append((a, b) + lines[k])
    return parts


def arms_build(support, target_log, values=None) -> "PiecewiseProposal":
    """ARMS piecewise-linear potential from >= 2 support points.

    Tail intervals extrapolate the outermost secants; interior intervals use
    max{L_{j,j+1}, min{L_{j-1,j}, L_{j+1,j+2}}}.  With K=2 the single secant
    is used everywhere.  Tails whose mass diverges (or exceeds the cap) are
    truncated; ``clipped`` records that.
    """
    support = np.asarray(support, dtype=float)
    if len(support) < 2:
        raise ValueError("need at least 2 support points")
    if len(np.unique(support)) != len(support):
        raise ValueError("duplicate support abscissae")
    order = np.argsort(support)
    support = support[order]
    if values is None:
        values = np.array([target_log(s) for s in support])
    else:
        values = np.asarray(values, dtype=float)[order]
    if not np.all(np.isfinite(values)):
        raise ValueError("target log must be finite at all support points")

    K = len(support)
    shift = float(values.max())
    secants = [_line(support[j], values[j], support[j + 1], values[j + 1])
               for j in range(K - 1)]

    segments = []  # (lo, hi, w0, slope) on finite interior intervals
    if K == 2:
        w0, s = secants[0]
        segments.append((support[0], support[1], w0, s))
        left_line = right_line = (w0, s)
    else:
        for j in range(K - 1):  # interval (support[j], support[j+1])
            if j == 0:
                lines = [secants[0], secants[1]]
                combine = lambda vals: int(np.argmax(vals))
            elif j == K - 2:
                lines = [secants[K - 3], secants[K - 2]]
                combine = lambda vals: int(np.argmax(vals))
            else:
                lines = [secants[j], secants[j - 1], secants[j + 1]]

                def combine(vals):
                    inner = 1 if vals[1] <= vals[2] else 2
                    return 0 if vals[0] >= vals[inner] else inner

            segments.extend(
                _subdivide(support[j], support[j + 1], lines, combine))
        left_line = secants[0]
        right_line = secants[K - 2]

    pieces = [_make_piece(lo, hi, w0, s, shift) for (lo, hi, w0, s) in segments]
    left, clipped_l = _truncated_tail("left", support[0], *left_line, shift)
    right, clipped_r = _truncated_tail("right", support[-1], *right_line, shift)
    pieces = [left] + pieces + [right]
    return PiecewiseProposal(
        support=support, values=values, pieces=pieces, shift=shift,
        has_tails=True, clipped=clipped_l or clipped_r,
    )


def _pwl_build(support, values) -> "PiecewiseProposal":
    """Plain piecewise-linear interpolant of the log target (FUSS-style, no tails)."""
    support = np.asarray(support, dtype=float)
    values = np.asarray(values, dtype=float)
    shift = float(values.max())
    pieces = []
    for j in range(len(support) - 1):
        w0, s = _line(support[j], values[j], support[j + 1], values[j + 1])
        pieces.append(_make_piece(support[j], support[j + 1], w0, s, shift))
    return PiecewiseProposal(
        support=support, values=values, pieces=pieces, shift=shift,
        has_tails=False,
    )


def _arms_mh_alpha(x_old, x_new, lp_old, lp_new, prop: PiecewiseProposal) -> float:
    """min{pi,q}-corrected MH acceptance used by ARMS and IA2RMS."""
    w_old = prop.log_envelope(x_old)
    w_new = prop.log_envelope(x_new)
    num = lp_new + min(lp_old, w_old)
    den = lp_old + min(lp_new, w_new)
    if den == -math.inf:
        return 1.0
    return min(1.0, math.exp(min(num - den, 0.0)))


def arms_step(state, prop: PiecewiseProposal, target: LogTarget, rng: RandomStream):
    """One ARMS transition.

    The candidate first passes a rejection test against the envelope; an
    RS-rejection adds the candidate to the support, rebuilds the proposal and
    leaves the chain untouched (the chain clock should not advance).  An
    RS-accepted candidate goes through the min{pi,q} MH test.  Returns
    (point, proposal, accepted, info).
    """
    x = float(np.asarray(state).ravel()[0])
    target_log = lambda th: target.eval_log(np.array([th]))
    cand = prop.sample(rng)
    lp_cand = target_log(cand)
    u = rng.uniform()
    log_u = math.log(u) if u > 0 else -math.inf
    if log_u > lp_cand - prop.log_envelope(cand):
        new_prop = prop.with_point(cand, target_log)
        return np.array([x]), new_prop, False, {"stage": "rs_reject"}
    lp_x = target_log(x)
    alpha = _arms_mh_alpha(x, cand, lp_x, lp_cand, prop)
    u2 = rng.uniform()
    if u2 <= alpha:
        return np.array([cand]), prop, True, {"stage": "mh", "alpha": alpha}
    return np.array([x]), prop, False, {"stage": "mh", "alpha": alpha}


def ia2rms_step(state, prop: PiecewiseProposal, target: LogTarget, rng: RandomStream):
    """IA2RMS transition: ARMS plus the second support-update test.

    The auxiliary point (rejected candidate, or the displaced previous state
    on acceptance) joins the support with probability
    max{0, 1 - q(aux)/pi(aux)}.  Returns (point, proposal, accepted, info).
    """
    x = float(np.asarray(state).ravel()[0])
    target_log = lambda th: target.eval_log(np.array([th]))
    cand = prop.sample(rng)
    lp_cand = target_log(cand)
    u = rng.uniform()
    log_u = math.log(u) if u > 0 else -math.inf
    if log_u > lp_cand - prop.log_envelope(cand):
        new_prop = prop.with_point(cand, target_log)
        return np.array([x]), new_prop, False, {"stage": "rs_reject"}
    lp_x = target_log(x)
    alpha = _arms_mh_alpha(x, cand, lp_x, lp_cand, prop)
    u2 = rng.uniform()
    accepted = u2 <= alpha
    if accepted:
        new_x, aux, lp_aux = cand, x, lp_x
    else:
        new_x, aux, lp_aux = x, cand, lp_cand
    u3 = rng.uniform()
    log_u3 = math.log(u3) if u3 > 0 else -math.inf
    added = log_u3 > prop.log_envelope(aux) - lp_aux
    new_prop = prop.with_point(aux, target_log) if added else prop
    return (
        np.array([new_x]),
        new_prop,
        bool(accepted),
        {"stage": "mh", "alpha": alpha, "support_added": added},
    )


def fuss_build(
    dense_grid,
    target_log: Callable,
    delta: float,
    K_keep: int,
) -> PiecewiseProposal:
    """FUSS proposal: prune a dense grid, then interpolate the log target.

    A grid point is pruned when removing it changes the piecewise-linear
    log-interpolant by less than ``delta`` (relative); local maxima of the
    grid are kept unconditionally, and at least ``K_keep`` points survive
    (evenly spaced anchors are added back if pruning went further).
    """
    grid = np.asarray(dense_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("dense grid must be sorted and strictly increasing")
    if len(grid) < K_keep:
        raise ValueError("grid shorter than K_keep")
    try:
        vals = np.asarray(target_log(grid), dtype=float)
        if vals.shape != grid.shape:
            raise TypeError
    except TypeError:
        vals = np.array([float(target_log(g)) for g in grid])

    finite = np.isfinite(vals)
    if finite.sum() < 2:
        raise ValueError("fewer than 2 grid points inside the support")
    grid, vals = grid[finite], vals[finite]
    n = len(grid)

    keep = np.ones(n, dtype=bool)
    interior = (vals[1:-1] > vals[:-2]) & (vals[1:-1] > vals[2:])
    local_max = np.zeros(n, dtype=bool)
    local_max[1:-1] = interior
    local_max[int(np.argmax(vals))] = True

    # iterative pruning: per pass, drop alternate removable points so that a
    # removed point's neighbours survive into the next error computation
    while True:
        idx = np.flatnonzero(keep)
        if len(idx) <= 2:
            break
        j, a, b = idx[1:-1], idx[:-2], idx[2:]
        interp = vals[a] + (vals[b] - vals[a]) * (grid[j] - grid[a]) / (grid[b] - grid[a])
        err = np.abs(vals[j] - interp)
        removable = (err < delta * np.maximum(1.0, np.abs(vals[j]))) & ~local_max[j]
        pos = np.flatnonzero(removable)
        if len(pos) == 0:
            break
        keep[j[pos[::2]]] = False

    if keep.sum() < K_keep:
        anchors = np.unique(np.round(np.linspace(0, n - 1, K_keep)).astype(int))
        keep[anchors] = True
    return _pwl_build(grid[keep], vals[keep])
