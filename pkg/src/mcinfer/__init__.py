"""Unified Monte Carlo inference toolkit: MCMC, importance sampling, SMC, particle MCMC."""

from .core import (
    LogTarget,
    ParticleSet,
    Proposal,
    RandomStream,
    WeightedSample,
    mc_estimate,
    rejection_sample,
    seeded_stream,
    split,
    theoretical_rs_acceptance,
)
from .chain import (
    ChainTrace,
    ScanPolicy,
    barker_alpha,
    mh_step,
    run_chain,
    thin,
    trace_estimate,
)
from .diagnostics import autocorrelation, ess_mcmc, psrf

__version__ = "0.1.0"
