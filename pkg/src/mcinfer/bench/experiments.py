"""Desk-scale experiment runners and the experiment registry."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..core import LogTarget, RandomStream, seeded_stream
from ..adaptive import fuss_build
from ..ais import ProposalPopulation, ais_estimate, ais_iteration, amis_reweight
from . import targets as bt

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "EXPERIMENTS",
    "run_experiment",
    "exp_gm1d",
    "exp_gm2d5",
    "exp_logistic",
    "exp_wsn",
    "exp_spectral",
    "run_parallel_rw_chains",
]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Shared vectorized helpers
# ---------------------------------------------------------------------------

def run_parallel_rw_chains(target, inits, sigma, n_steps, rng: RandomStream):
    """N random-walk MH chains stepped jointly (vectorized across chains).

    Returns (states, accepted) with shapes (T, N, D) and (T, N).
    """
    x = np.atleast_2d(np.asarray(inits, dtype=float)).copy()
    N, D = x.shape
    lp = target.log_many(x)
    states = np.empty((n_steps, N, D))
    accepted = np.empty((n_steps, N), dtype=bool)
    for t in range(n_steps):
        cand = x + sigma * rng.normal(size=(N, D))
        lp_cand = target.log_many(cand)
        with np.errstate(invalid="ignore"):
            log_alpha = np.minimum(lp_cand - lp, 0.0)
        log_alpha = np.where(np.isnan(log_alpha), -np.inf, log_alpha)
        acc = np.log(rng.uniform(size=N) + 1e-300) <= log_alpha
        x = np.where(acc[:, None], cand, x)
        lp = np.where(acc, lp_cand, lp)
        states[t] = x
        accepted[t] = acc
    return states, accepted


def _row_logsumexp(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=-1)
    safe = np.where(np.isfinite(m), m, 0.0)
    out = safe + np.log(np.sum(np.exp(a - safe[..., None]), axis=-1))
    return np.where(m == -np.inf, -np.inf, out)


def _lag1(sum_x, sum_x2, sum_xx, first, last, T):
    """Lag-1 sample autocorrelation from running sums (biased estimator).

    A numerically constant chain has undefined autocorrelation; it is
    reported as 1 (perfectly sticky).
    """
    mean = sum_x / T
    num = sum_xx - mean * (2 * sum_x - first - last) + (T - 1) * mean ** 2
    den = sum_x2 - T * mean ** 2
    return np.where(den > 1e-9 * T, num / np.maximum(den, 1e-300), 1.0)


# ---------------------------------------------------------------------------
# Experiment 1: univariate Gaussian mixture, adaptive MCMC (AM / AGM-MH / MH)
# ---------------------------------------------------------------------------

def _mix_logpdf_rows(x, w, mu, var):
    """log sum_n w_rn N(x_r | mu_rn, var_rn), rowwise; x is (R,)."""
    z = -0.5 * (x[:, None] - mu) ** 2 / var
    comp = np.log(w) - 0.5 * np.log(2 * np.pi * var) + z
    return _row_logsumexp(comp)


def exp_gm1d(
    sampler: str,
    n_modes: int = 3,
    T: int = 5000,
    T_train: int = 200,
    replicates: int = 200,
    seed: int = 1,
    rw_sigma: float = 2.0,
    am_target_ar: float = 0.44,
):
    """Adaptive-MCMC benchmark on the 1-D mixture, vectorized across replicates.

    Per replicate the report carries the chain-average and candidate-recycling
    IS estimates of the posterior mean, the recycled estimate of the
    normalizing constant (true value 1), the lag-1 autocorrelation, and the
    pre-/post-training acceptance averages.
    """
    if sampler not in ("agm_mh", "am", "mh"):
        raise ConfigError(f"unknown gm1d sampler {sampler!r}")
    target = bt.target_gm1d(n_modes)
    batch = target.eval_log_batch
    R = replicates
    rng = seeded_stream(seed).gen

    x = rng.normal(size=R)  # theta^(0) ~ N(0, 1)
    lp_x = batch(x[:, None])

    if sampler == "agm_mh":
        N = n_modes
        mu = rng.uniform(-20, 20, size=(R, N))
        var = np.full((R, N), 10.0)
        counts = np.full((R, N), 50.0)
        w = np.full((R, N), 1.0 / N)
        w_run_mean = np.ones(R)
        n_w = 0
    elif sampler == "am":
        lam = np.ones(R)
        wf_mean = x.copy()
        wf_m2 = np.zeros(R)
        wf_n = 1
        sigma2 = np.full(R, 10.0)
        eps = 1e-6

    sum_x = np.zeros(R)
    sum_x2 = np.zeros(R)
    sum_xx = np.zeros(R)
    first = x.copy()
    s0 = np.zeros(R)   # recycled IS: sum of weights
    s1 = np.zeros(R)   # recycled IS: sum of weight * candidate
    alpha_pre = np.zeros(R)
    alpha_post = np.zeros(R)
    alpha_curve = np.zeros(T)
    x_prev = x.copy()

    for t in range(1, T + 1):
        if sampler == "agm_mh":
            u1 = rng.uniform(size=R)
            cumw = np.cumsum(w, axis=1)
            k = np.minimum((u1[:, None] > cumw).sum(axis=1), w.shape[1] - 1)
            idx = np.arange(R)
            cand = mu[idx, k] + np.sqrt(var[idx, k]) * rng.normal(size=R)
            lq_cand = _mix_logpdf_rows(cand, w, mu, var)
            lq_x = _mix_logpdf_rows(x, w, mu, var)
            lp_cand = batch(cand[:, None])
            log_ratio = lp_cand + lq_x - lp_x - lq_cand
        elif sampler == "am":
            prop_var = lam * sigma2
            cand = x + np.sqrt(prop_var) * rng.normal(size=R)
            lp_cand = batch(cand[:, None])
            log_ratio = lp_cand - lp_x
            lq_cand = -0.5 * np.log(2 * np.pi * prop_var) - 0.5 * (cand - x) ** 2 / prop_var
        else:
            cand = x + rw_sigma * rng.normal(size=R)
            lp_cand = batch(cand[:, None])
            log_ratio = lp_cand - lp_x
            lq_cand = (-0.5 * math.log(2 * math.pi * rw_sigma ** 2)
                       - 0.5 * (cand - x) ** 2 / rw_sigma ** 2)

        alpha = np.exp(np.minimum(log_ratio, 0.0))
        acc = rng.uniform(size=R) <= alpha
        x = np.where(acc, cand, x)
        lp_x = np.where(acc, lp_cand, lp_x)

        # recycled-candidate IS estimators (Z and posterior mean)
        w_is = np.exp(lp_cand - lq_cand)
        s0 += w_is
        s1 += w_is * cand

        if sampler == "agm_mh" and t >= T_train:
            # importance-mass moment matching on the candidate stream: the
            # candidate's (capped, relative) IS weight sets the update mass,
            # so even rejected draws that hit an under-covered mode pull the
            # nearest component over
            n_w += 1
            w_run_mean += (w_is - w_run_mean) / n_w
            z = -0.5 * (cand[:, None] - mu) ** 2 / var
            lr = np.log(w) - 0.5 * np.log(var) + z
            lr -= lr.max(axis=1, keepdims=True)
            r = np.exp(lr)
            r /= r.sum(axis=1, keepdims=True)
            mass = np.minimum(w_is / np.maximum(w_run_mean, 1e-300), 50.0)
            r *= mass[:, None]
            counts += r
            delta = cand[:, None] - mu
            mu = mu + r * delta / counts
            var = np.maximum(var + r * (delta ** 2 - var) / counts, 1.0)
            w = counts / counts.sum(axis=1, keepdims=True)
        elif sampler == "am":
            wf_n += 1
            delta = x - wf_mean
            wf_mean = wf_mean + delta / wf_n
            wf_m2 = wf_m2 + delta * (x - wf_mean)
            sigma2 = wf_m2 / (wf_n - 1) + eps
            # the 1-D optimal acceptance rate is ~0.44, unlike the
            # high-dimensional 0.234 default used by the am_step kernel
            lam = lam * np.exp(t ** (-0.6) * (alpha - am_target_ar))

        sum_x += x
        sum_x2 += x ** 2
        if t > 1:
            sum_xx += x * x_prev
        x_prev = x.copy()
        alpha_curve[t - 1] = float(alpha.mean())
        if t <= T_train:
            alpha_pre += alpha / T_train
        else:
            alpha_post += alpha / (T - T_train)

    chain_mean = sum_x / T
    lag1 = _lag1(sum_x, sum_x2, sum_xx, first, x, T)
    snis_mean = s1 / np.maximum(s0, 1e-300)
    z_hat = s0 / T
    return {
        "sampler": sampler,
        "chain_mean": chain_mean,
        "snis_mean": snis_mean,
        "z_hat": z_hat,
        "lag1": lag1,
        "alpha_pre": alpha_pre,
        "alpha_post": alpha_post,
        "alpha_curve": alpha_curve,
        "mse_chain_mean": float(np.mean(chain_mean ** 2)),
        "mse_snis_mean": float(np.mean(snis_mean ** 2)),
        "mse_z": float(np.mean((z_hat - 1.0) ** 2)),
        "mean_lag1": float(np.mean(lag1)),
    }


# ---------------------------------------------------------------------------
# Experiment 2: bivariate 5-mode mixture, adaptive importance sampling
# ---------------------------------------------------------------------------

_GM2D5_SAMPLERS = {
    "lr_pmc": dict(denominator="spatial_mixture", adaptation="resample_LR"),
    "gr_pmc": dict(denominator="spatial_mixture", adaptation="resample_GR"),
    "dm_pmc": dict(denominator="spatial_mixture", adaptation="resample_GR"),
    "standard_pmc": dict(denominator="own", adaptation="resample_GR"),
    "amis": dict(denominator="temporal_mixture", adaptation="moment_fit"),
}


def exp_gm2d5(
    sampler: str,
    sigma: float = 2.0,
    N: int = 100,
    K: int = 5,
    budget: int = 200_000,
    replicates: int = 25,
    seed: int = 2,
):
    """Adaptive IS benchmark on the five-mode bivariate mixture (fixed budget KNT)."""
    if sampler not in _GM2D5_SAMPLERS:
        raise ConfigError(f"unknown gm2d5 sampler {sampler!r}")
    if sampler in ("standard_pmc", "dm_pmc"):
        K = 1
    if sampler == "amis":
        N = 1
    T = budget // (K * N)
    if T * K * N != budget:
        raise ConfigError("budget must equal K * N * T")
    target = bt.target_gm2d5()
    kind = _GM2D5_SAMPLERS[sampler]

    master = seeded_stream(seed)
    streams = master.split(replicates)
    est = np.empty((replicates, 2))
    z_hat = np.empty(replicates)
    for r, stream in enumerate(streams):
        means0 = stream.gen.uniform(-4, 4, size=(N, 2))
        pop = ProposalPopulation(
            means=means0, scales=sigma ** 2 * np.eye(2), **kind)
        pool, samples_hist, lp_hist = [], [], []
        for _ in range(T):
            ps, pop, info = ais_iteration(pop, target, K, stream)
            if sampler == "amis":
                samples_hist.append(info["samples"])
                lp_hist.append(info["log_pi"])
            else:
                pool.append(ps)
        if sampler == "amis":
            pool = amis_reweight(pop, samples_hist, lp_hist)
        m0, zh = ais_estimate(pool, lambda p: p[0])
        m1, _ = ais_estimate(pool, lambda p: p[1])
        est[r] = (m0, m1)
        z_hat[r] = zh
    err2 = (est - bt.GM2D5_MEAN[None, :]) ** 2
    return {
        "sampler": sampler,
        "estimates": est,
        "z_hat": z_hat,
        "mse": float(np.mean(err2)),          # averaged over both components
        "mean_abs_err": np.abs(est - bt.GM2D5_MEAN).mean(axis=0),
        "z_mean": float(z_hat.mean()),
        "config": {"sigma": sigma, "N": N, "K": K, "T": T, "budget": budget},
    }


# ---------------------------------------------------------------------------
# Experiment 3: chaotic logistic-map posterior, FUSS vs MH within Gibbs
# ---------------------------------------------------------------------------

def _gibbs_logistic_run(
    z_obs, lam, method, n_gibbs, rng: RandomStream,
    grid, delta, K_keep, sigma_p,
):
    zmax = float(np.max(z_obs[:-1]))
    state = np.array([
        rng.uniform(1.0, 5.0),
        max(rng.uniform(0.38, 1.5), zmax * (1 + 1e-9) + 1e-9),
    ])
    states = np.empty((n_gibbs, 2))
    for sweep in range(n_gibbs):
        for coord in (0, 1):
            cond = bt.logistic_map_conditional(z_obs, lam, coord, state[1 - coord])
            xd = state[coord]
            lp_x = float(cond(np.array([xd]))[0])
            if method == "fuss":
                prop = fuss_build(grid, cond, delta, K_keep)
                cand = prop.sample(rng)
                lp_c = float(cond(np.array([cand]))[0])
                lq_c = prop.log_density(cand)
                lq_x = prop.log_density(xd)
                if lp_x == -math.inf and lp_c > -math.inf:
                    log_alpha = 0.0
                else:
                    log_alpha = min(0.0, (lp_c + lq_x) - (lp_x + lq_c))
            else:
                cand = xd + sigma_p * rng.normal()
                lp_c = float(cond(np.array([cand]))[0])
                if lp_x == -math.inf and lp_c > -math.inf:
                    log_alpha = 0.0
                elif lp_c == -math.inf:
                    log_alpha = -math.inf
                else:
                    log_alpha = min(0.0, lp_c - lp_x)
            if math.log(rng.uniform() + 1e-300) <= log_alpha:
                state[coord] = cand
        states[sweep] = state
    return states.mean(axis=0)


def exp_logistic(
    sampler: str,
    lam: float = 0.05,
    n_gibbs: int = 50,
    replicates: int = 200,
    seed: int = 3,
    R_true: float = 3.7,
    Omega_true: float = 0.4,
    T_obs: int = 20,
    sigma_p: float = 1.0,
    grid_step: float = 1e-3,
    delta: float = 1e-3,
    K_keep: int = 10,
):
    """Chaotic-system parameter estimation, FUSS- or MH-within-Gibbs."""
    if sampler not in ("fuss", "mh"):
        raise ConfigError(f"unknown logistic sampler {sampler!r}")
    grid = np.arange(grid_step, 20.0 + grid_step / 2, grid_step)
    master = seeded_stream(seed)
    streams = master.split(replicates)
    est = np.empty((replicates, 2))
    for r, stream in enumerate(streams):
        data_rng, chain_rng = stream.split(2)
        z_obs = bt.generate_logistic_map_data(R_true, Omega_true, lam, T_obs, data_rng)
        est[r] = _gibbs_logistic_run(
            z_obs, lam, sampler, n_gibbs, chain_rng, grid, delta, K_keep, sigma_p)
    truth = np.array([R_true, Omega_true])
    err2 = (est - truth[None, :]) ** 2
    return {
        "sampler": sampler,
        "estimates": est,
        "mse_R": float(err2[:, 0].mean()),
        "mse_Omega": float(err2[:, 1].mean()),
        "config": {"lam": lam, "n_gibbs": n_gibbs, "sigma_p": sigma_p},
    }


# ---------------------------------------------------------------------------
# Experiment 4: WSN localization, GMS vs parallel MH chains
# ---------------------------------------------------------------------------

def _gms_wsn_run(target, N, T, rng: RandomStream, sigma=1.0, train_frac=0.2):
    D = target.dim
    mu = rng.uniform(1.0, 5.0, size=D)
    z_prev = None
    set_means = []
    all_means = []
    t_train = max(1, int(train_frac * T))
    for t in range(T):
        cand = mu[None, :] + sigma * rng.normal(size=(N, D))
        lp = target.log_many(cand)
        lq = -0.5 * np.sum((cand - mu[None, :]) ** 2, axis=1) / sigma ** 2
        log_w = lp - lq
        log_z = _row_logsumexp(log_w[None, :])[0] - math.log(N)
        if z_prev is None or math.log(rng.uniform() + 1e-300) <= log_z - z_prev:
            z_prev = log_z
            wbar = np.exp(log_w - _row_logsumexp(log_w[None, :])[0])
            current = (cand, wbar)
        cand_s, wbar_s = current
        set_means.append(np.sum(wbar_s[:, None] * cand_s, axis=0))
        all_means.append(set_means[-1])
        if t + 1 >= t_train:
            mu = np.mean(all_means, axis=0)
    burn = max(1, int(train_frac * T))
    return np.mean(set_means[burn:], axis=0)


def exp_wsn(
    sampler: str,
    N: int = 500,
    budget: int = 10_000,
    replicates: int = 50,
    seed: int = 4,
    data_seed: int = 123,
    sigma: float = 1.0,
):
    """WSN localization and noise-tuning at a fixed posterior-evaluation budget."""
    if sampler not in ("gms", "parallel_mh"):
        raise ConfigError(f"unknown wsn sampler {sampler!r}")
    data_rng = seeded_stream(data_seed)
    Y = bt.generate_wsn_data(data_rng)
    base = bt.target_wsn(Y)
    truth = np.concatenate([bt.WSN_TRUE_POSITION, bt.WSN_TRUE_SIGMAS])
    T = budget // N
    if T * N != budget:
        raise ConfigError("budget must be divisible by N")

    master = seeded_stream(seed)
    streams = master.split(replicates)
    est = np.empty((replicates, 8))
    evals = np.empty(replicates)
    for r, stream in enumerate(streams):
        target = bt.CountingTarget(base)
        if sampler == "gms":
            est[r] = _gms_wsn_run(target, N, T, stream, sigma=sigma)
        else:
            inits = stream.gen.uniform(1.0, 5.0, size=(N, 8))
            states, _ = run_parallel_rw_chains(target, inits, sigma, T, stream)
            est[r] = states.reshape(-1, 8).mean(axis=0)
        evals[r] = target.count
    err2 = np.sum((est - truth[None, :]) ** 2, axis=1)
    return {
        "sampler": sampler,
        "estimates": est,
        "mse": float(err2.mean()),
        "eval_counts": evals,
        "config": {"N": N, "T": T, "budget": budget, "sigma": sigma},
    }


# ---------------------------------------------------------------------------
# Experiment 5: spectral analysis, independent vs interacting parallel chains
# ---------------------------------------------------------------------------

def _spectral_estimate(states: np.ndarray, burn_frac=0.2) -> np.ndarray:
    """Pooled posterior-mean estimate with per-sample sorted components."""
    flat = states.reshape(-1, states.shape[-1]) if states.ndim == 3 else states
    n_burn = int(burn_frac * len(flat))
    kept = np.sort(flat[n_burn:], axis=1)
    return kept.mean(axis=0)


def _spectral_interacting_run(target, n_chains, budget, rng, sigma, sigma_ex):
    D = target.dim
    x = rng.gen.uniform(0.0, 0.5, size=(n_chains, D))
    lp = target.log_many(x)
    collected = []
    turn = 0
    while target.count < budget:
        # vertical: one RW-MH step per chain, vectorized
        cand = x + sigma * rng.gen.normal(size=(n_chains, D))
        lp_cand = target.log_many(cand)
        acc = np.log(rng.gen.uniform(size=n_chains) + 1e-300) <= np.minimum(
            lp_cand - lp, 0.0)
        x = np.where(acc[:, None], cand, x)
        lp = np.where(acc, lp_cand, lp)
        collected.append(x.copy())
        if target.count >= budget:
            break
        # horizontal: one independent-MTM exchange on a cyclically chosen chain,
        # with the population mixture as the proposal
        j = turn % n_chains
        turn += 1
        tries = x[rng.gen.integers(0, n_chains, size=n_chains)] + sigma_ex * rng.gen.normal(
            size=(n_chains, D))
        lp_tries = target.log_many(tries)
        lq_tries = _mixture_logpdf(tries, x, sigma_ex)
        log_w = lp_tries - lq_tries
        if np.all(log_w == -np.inf):
            continue
        wbar = np.exp(log_w - log_w.max())
        k = rng.choice(n_chains, p=wbar / wbar.sum())
        lq_state = _mixture_logpdf(x[j:j + 1], x, sigma_ex)[0]
        log_w_state = lp[j] - lq_state
        log_z1 = _row_logsumexp(log_w[None, :])[0]
        others = np.delete(log_w, k)
        log_z2 = _row_logsumexp(np.append(others, log_w_state)[None, :])[0]
        if math.log(rng.gen.uniform() + 1e-300) <= log_z1 - log_z2:
            x[j] = tries[k]
            lp[j] = lp_tries[k]
        collected.append(x.copy())
    return np.array(collected)


def _mixture_logpdf(pts, centers, sigma):
    d2 = np.sum((pts[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    comp = -0.5 * d2 / sigma ** 2 - pts.shape[1] * math.log(
        math.sqrt(2 * math.pi) * sigma) - math.log(len(centers))
    return _row_logsumexp(comp)


def exp_spectral(
    sampler: str,
    n_chains: int = 5,
    budget: int = 2730,
    replicates: int = 100,
    seed: int = 5,
    data_seed: int = 7,
    sigma: float = 0.05,
    sigma_ex: float = 0.05,
    sigma_w: float = 1.0,
    freqs=(0.1, 0.3),
    n_data: int = 10,
):
    """Frequency estimation: N independent chains vs chains with an MTM exchange."""
    if sampler not in ("parallel_mh", "interacting"):
        raise ConfigError(f"unknown spectral sampler {sampler!r}")
    freqs = np.asarray(freqs, dtype=float)
    y = bt.generate_spectral_data(freqs, sigma_w, n_data, seeded_stream(data_seed))
    base = bt.target_spectral(y, sigma_w, n_freqs=len(freqs))
    truth = np.sort(freqs)

    master = seeded_stream(seed)
    streams = master.split(replicates)
    rel_err = np.empty(replicates)
    for r, stream in enumerate(streams):
        target = bt.CountingTarget(base)
        if sampler == "parallel_mh":
            T = budget // n_chains
            inits = stream.gen.uniform(0.0, 0.5, size=(n_chains, len(freqs)))
            states, _ = run_parallel_rw_chains(target, inits, sigma, T, stream)
            est = _spectral_estimate(states)
        else:
            states = _spectral_interacting_run(
                target, n_chains, budget, stream, sigma, sigma_ex)
            est = _spectral_estimate(states)
        rel_err[r] = np.linalg.norm(est - truth) / np.linalg.norm(truth)
    return {
        "sampler": sampler,
        "relative_errors": rel_err,
        "median_re": float(np.median(rel_err)),
        "config": {"n_chains": n_chains, "budget": budget},
    }


# ---------------------------------------------------------------------------
# Registry and configuration
# ---------------------------------------------------------------------------

EXPERIMENTS = {
    "gm1d": {
        "runner": exp_gm1d,
        "samplers": ("agm_mh", "am", "mh"),
        "describe": "1-D Gaussian-mixture target; adaptive MCMC comparison "
                    "(mixture-proposal MH vs adaptive Metropolis vs plain MH).",
    },
    "gm2d5": {
        "runner": exp_gm2d5,
        "samplers": tuple(_GM2D5_SAMPLERS),
        "describe": "Bivariate 5-mode Gaussian mixture; population importance "
                    "samplers at a fixed evaluation budget.",
    },
    "logistic_map": {
        "runner": exp_logistic,
        "samplers": ("fuss", "mh"),
        "describe": "Chaotic logistic-map posterior over (R, Omega); "
                    "grid-adapted vs random-walk within-Gibbs sampling.",
    },
    "wsn": {
        "runner": exp_wsn,
        "samplers": ("gms", "parallel_mh"),
        "describe": "Sensor-network localization with unknown per-sensor noise; "
                    "group Metropolis sampling vs parallel MH chains.",
    },
    "spectral": {
        "runner": exp_spectral,
        "samplers": ("parallel_mh", "interacting"),
        "describe": "Sinusoid frequency estimation; independent vs interacting "
                    "parallel chains (MTM exchange).",
    },
}


@dataclass
class ExperimentConfig:
    experiment: str
    sampler: str
    replicates: int = 50
    seed: int = 1
    out: Optional[str] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.sampler not in EXPERIMENTS[self.experiment]["samplers"]:
            raise ConfigError(
                f"sampler {self.sampler!r} does not apply to {self.experiment!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        # evaluation-budget contract, when the pieces are all pinned
        p = self.params
        if self.experiment == "gm2d5" and {"budget", "N", "K"} <= p.keys():
            if p["budget"] % (p["N"] * p["K"]) != 0:
                raise ConfigError("gm2d5 budget must be divisible by N * K")


def run_experiment(config: ExperimentConfig) -> dict:
    """Run one configured experiment; deterministic given the seed."""
    runner = EXPERIMENTS[config.experiment]["runner"]
    t0 = time.perf_counter()
    try:
        result = runner(
            config.sampler,
            replicates=config.replicates,
            seed=config.seed,
            **config.params,
        )
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {config.experiment!r}: {exc}") from exc
    result["wall_time_s"] = time.perf_counter() - t0
    result["experiment"] = config.experiment
    result["replicates"] = config.replicates
    result["seed"] = config.seed
    return result
