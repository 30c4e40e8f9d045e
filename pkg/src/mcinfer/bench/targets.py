"""Benchmark targets: Gaussian mixtures, chaotic-map posterior, WSN, spectral."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import LogTarget, RandomStream

__all__ = [
    "CountingTarget",
    "target_gm1d",
    "GM1D_MEANS",
    "target_gm2d5",
    "GM2D5_MEAN",
    "generate_logistic_map_data",
    "target_logistic_map",
    "logistic_map_conditional",
    "WSN_SENSORS",
    "WSN_TRUE_POSITION",
    "WSN_TRUE_SIGMAS",
    "generate_wsn_data",
    "target_wsn",
    "generate_spectral_data",
    "target_spectral",
]


class CountingTarget:
    """Wrap a LogTarget and count density evaluations (budget accounting)."""

    def __init__(self, target: LogTarget):
        self._target = target
        self.count = 0
        self.dim = target.dim
        self.grad_log = target.grad_log
        self.factors = target.factors

    def eval_log(self, x):
        self.count += 1
        return self._target.eval_log(x)

    def log_many(self, pts):
        pts = np.atleast_2d(pts)
        self.count += len(pts)
        return self._target.log_many(pts)

    @property
    def eval_log_batch(self):
        return None if self._target.eval_log_batch is None else self.log_many


GM1D_MEANS = {
    2: np.array([-10.0, 10.0]),
    3: np.array([-10.0, 0.0, 10.0]),
    6: np.array([-15.0, -10.0, -5.0, 5.0, 10.0, 15.0]),
}
_GM1D_VAR = 4.0


def target_gm1d(n_modes: int) -> LogTarget:
    """Equal-weight 1-D Gaussian mixture with variance 4 per mode (normalized)."""
    if n_modes not in GM1D_MEANS:
        raise ValueError(f"unsupported mode count {n_modes}")
    means = GM1D_MEANS[n_modes]
    log_norm = -0.5 * math.log(2 * math.pi * _GM1D_VAR) - math.log(len(means))

    def batch(pts):
        x = np.atleast_2d(pts)[:, 0]
        z = -0.5 * (x[:, None] - means[None, :]) ** 2 / _GM1D_VAR
        m = z.max(axis=1)
        return log_norm + m + np.log(np.sum(np.exp(z - m[:, None]), axis=1))

    def grad(x):
        xv = float(np.asarray(x).ravel()[0])
        z = -0.5 * (xv - means) ** 2 / _GM1D_VAR
        w = np.exp(z - z.max())
        g = np.sum(w * (-(xv - means) / _GM1D_VAR)) / np.sum(w)
        return np.array([g])

    return LogTarget(
        dim=1,
        eval_log=lambda x: float(batch(np.atleast_2d(x))[0]),
        grad_log=grad,
        eval_log_batch=batch,
    )


_GM2D5_NU = np.array([
    [-10.0, -10.0],
    [0.0, 16.0],
    [13.0, 8.0],
    [-9.0, 7.0],
    [14.0, -14.0],
])
_GM2D5_SIGMA = np.array([
    [[2.0, 0.6], [0.6, 1.0]],
    [[2.0, -0.4], [-0.4, 2.0]],
    [[2.0, 0.8], [0.8, 2.0]],
    [[3.0, 0.0], [0.0, 0.5]],
    [[2.0, -0.1], [-0.1, 2.0]],
])
GM2D5_MEAN = _GM2D5_NU.mean(axis=0)  # [1.6, 1.4]


def target_gm2d5() -> LogTarget:
    """Normalized mixture of five bivariate Gaussians; E[theta] = [1.6, 1.4], Z = 1."""
    invs = np.linalg.inv(_GM2D5_SIGMA)
    logdets = np.array([np.linalg.slogdet(s)[1] for s in _GM2D5_SIGMA])
    log_norm = -math.log(5) - math.log(2 * math.pi) - 0.5 * logdets

    def batch(pts):
        x = np.atleast_2d(pts)
        diff = x[:, None, :] - _GM2D5_NU[None, :, :]          # (M, 5, 2)
        quad = np.einsum("mki,kij,mkj->mk", diff, invs, diff)
        comp = log_norm[None, :] - 0.5 * quad
        m = comp.max(axis=1)
        return m + np.log(np.sum(np.exp(comp - m[:, None]), axis=1))

    def grad(x):
        x = np.asarray(x, dtype=float)
        diff = x[None, :] - _GM2D5_NU
        quad = np.einsum("ki,kij,kj->k", diff, invs, diff)
        comp = log_norm - 0.5 * quad
        w = np.exp(comp - comp.max())
        w /= w.sum()
        grads = -np.einsum("kij,kj->ki", invs, diff)
        return np.sum(w[:, None] * grads, axis=0)

    return LogTarget(
        dim=2,
        eval_log=lambda x: float(batch(np.atleast_2d(x))[0]),
        grad_log=grad,
        eval_log_batch=batch,
    )


# ---------------------------------------------------------------------------
# Chaotic logistic map perturbed by multiplicative log-normal noise
# ---------------------------------------------------------------------------

def _logistic_g(z, R, Om):
    return R * z * (1.0 - z / Om)


def generate_logistic_map_data(
    R: float, Om: float, lam: float, T: int, rng: RandomStream, max_tries: int = 1000
) -> np.ndarray:
    """Simulate z_{t+1} = g(z_t) exp(eps_t); retries until the path stays valid."""
    for _ in range(max_tries):
        z = np.empty(T)
        z[0] = rng.uniform()
        ok = True
        for t in range(T - 1):
            g = _logistic_g(z[t], R, Om)
            if g <= 0:
                ok = False
                break
            z[t + 1] = g * math.exp(lam * rng.normal())
        if ok:
            return z
    raise RuntimeError("could not generate a valid observation path")


def _logistic_loglik_planes(z_obs: np.ndarray, lam: float):
    z_t = z_obs[:-1]
    z_next = z_obs[1:]
    return z_t, z_next


def target_logistic_map(z_obs: np.ndarray, lam: float) -> LogTarget:
    """Posterior over (R, Omega) with uniform priors on [0, 1e4]^2.

    The transition density carries the |g / z_next| Jacobian factor of the
    multiplicative noise; any transition with g <= 0 zeroes the posterior.
    """
    z_obs = np.asarray(z_obs, dtype=float)
    z_t, z_next = _logistic_loglik_planes(z_obs, lam)

    def batch(pts):
        p = np.atleast_2d(pts)
        R, Om = p[:, 0], p[:, 1]
        out = np.full(len(p), -np.inf)
        valid = (R > 0) & (R <= 1e4) & (Om > 0) & (Om <= 1e4)
        if not np.any(valid):
            return out
        g = R[valid, None] * z_t[None, :] * (1.0 - z_t[None, :] / Om[valid, None])
        pos = np.all(g > 0, axis=1)
        if np.any(pos):
            gg = g[pos]
            log_ratio = np.log(z_next[None, :] / gg)
            ll = np.sum(
                np.log(gg / z_next[None, :]) - 0.5 * log_ratio ** 2 / lam ** 2, axis=1
            )
            tmp = np.full(valid.sum(), -np.inf)
            tmp[pos] = ll
            out[valid] = tmp
        return out

    return LogTarget(
        dim=2,
        eval_log=lambda x: float(batch(np.atleast_2d(x))[0]),
        eval_log_batch=batch,
    )


def logistic_map_conditional(z_obs: np.ndarray, lam: float, coord: int, other: float):
    """Vectorized 1-D conditional log-density of R (coord=0) or Omega (coord=1)."""
    target = target_logistic_map(z_obs, lam)

    def cond(vals):
        vals = np.atleast_1d(np.asarray(vals, dtype=float))
        pts = np.empty((len(vals), 2))
        pts[:, coord] = vals
        pts[:, 1 - coord] = other
        return target.eval_log_batch(pts)

    return cond


# ---------------------------------------------------------------------------
# Wireless sensor network localization with per-sensor noise scales
# ---------------------------------------------------------------------------

WSN_SENSORS = np.array([
    [3.0, -8.0], [8.0, 10.0], [-4.0, -6.0], [-8.0, 1.0], [10.0, 0.0], [0.0, 10.0],
])
WSN_TRUE_POSITION = np.array([2.5, 2.5])
WSN_TRUE_SIGMAS = np.array([1.0, 2.0, 1.0, 0.5, 3.0, 0.2])


def _wsn_mean_obs(z: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(z[None, :] - WSN_SENSORS, axis=1)
    return 20.0 * np.log10(np.maximum(d, 1e-12))


def generate_wsn_data(rng: RandomStream, n_obs: int = 20) -> np.ndarray:
    """(n_obs, 6) range measurements from the ground-truth configuration."""
    mu = _wsn_mean_obs(WSN_TRUE_POSITION)
    return mu[None, :] + WSN_TRUE_SIGMAS[None, :] * rng.normal(size=(n_obs, len(mu)))


def target_wsn(Y: np.ndarray) -> LogTarget:
    """Posterior over (z1, z2, lambda_1..6): Gaussian likelihood, uniform priors.

    Position prior box [-30, 30]^2, per-sensor scale prior (0, 20].
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n_obs, n_sensors = Y.shape
    if n_sensors != len(WSN_SENSORS):
        raise ValueError("observation matrix must have one column per sensor")

    def batch(pts):
        p = np.atleast_2d(pts)
        z = p[:, :2]
        lam = p[:, 2:]
        out = np.full(len(p), -np.inf)
        ok = (
            np.all(np.abs(z) <= 30.0, axis=1)
            & np.all(lam > 0.0, axis=1)
            & np.all(lam <= 20.0, axis=1)
        )
        if not np.any(ok):
            return out
        d = np.linalg.norm(z[ok][:, None, :] - WSN_SENSORS[None, :, :], axis=2)
        mu = 20.0 * np.log10(np.maximum(d, 1e-12))          # (m, 6)
        resid = Y[None, :, :] - mu[:, None, :]              # (m, n_obs, 6)
        lam_ok = lam[ok]
        ll = -0.5 * np.sum(resid ** 2, axis=1) / lam_ok ** 2
        ll = np.sum(ll - n_obs * np.log(lam_ok), axis=1)
        out[ok] = ll - 0.5 * n_obs * n_sensors * math.log(2 * math.pi)
        return out

    return LogTarget(
        dim=8,
        eval_log=lambda x: float(batch(np.atleast_2d(x))[0]),
        eval_log_batch=batch,
    )


# ---------------------------------------------------------------------------
# Spectral analysis: frequencies of a noisy multi-sinusoidal signal
# ---------------------------------------------------------------------------

def generate_spectral_data(
    freqs: np.ndarray, sigma_w: float, L: int, rng: RandomStream
) -> np.ndarray:
    """y[k] = sum_i cos(2 pi f_i k) + noise for k = 1..L (A0=0, A_i=1, phases 0)."""
    freqs = np.asarray(freqs, dtype=float)
    k = np.arange(1, L + 1)
    clean = np.sum(np.cos(2 * math.pi * freqs[:, None] * k[None, :]), axis=0)
    return clean + sigma_w * rng.normal(size=L)


def target_spectral(y: np.ndarray, sigma_w: float, n_freqs: int = 2) -> LogTarget:
    """Posterior over frequencies in [0, 1/2]^D: log pi = -V with a box indicator."""
    y = np.asarray(y, dtype=float)
    L = len(y)
    k = np.arange(1, L + 1)

    def batch(pts):
        p = np.atleast_2d(pts)
        out = np.full(len(p), -np.inf)
        ok = np.all((p >= 0.0) & (p <= 0.5), axis=1)
        if not np.any(ok):
            return out
        model = np.sum(np.cos(2 * math.pi * p[ok][:, :, None] * k[None, None, :]), axis=1)
        v = 0.5 * np.sum((y[None, :] - model) ** 2, axis=1) / sigma_w ** 2
        out[ok] = -v
        return out

    def grad(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > 0.5):
            raise ValueError("gradient undefined outside the box")
        model = np.sum(np.cos(2 * math.pi * x[:, None] * k[None, :]), axis=0)
        resid = y - model
        dmodel = -2 * math.pi * k[None, :] * np.sin(2 * math.pi * x[:, None] * k[None, :])
        return (resid[None, :] * dmodel).sum(axis=1) / sigma_w ** 2

    return LogTarget(
        dim=n_freqs,
        eval_log=lambda x: float(batch(np.atleast_2d(x))[0]),
        grad_log=grad,
        eval_log_batch=batch,
    )
