"""Bayesian estimation of the double exponential jump-diffusion (DEJD) model.

Exact-conditional Gibbs sampling over parameters and per-day latent jump
indicators, posterior summaries, convergence paths and asymmetric jump
detection.
"""
__version__ = "0.1.0"

from .distributions import RngStream
from .model import DEFAULT_DELTA, LatentState, ModelParams, ReturnsSeries, dejd_pdf, simulate
from .priors import PriorSpec, preset
from .sampler import Chain, ChainConfig, run_chain
from .analysis import detect_jumps, jump_probabilities, summarize

__all__ = [
    "DEFAULT_DELTA",
    "RngStream",
    "ModelParams",
    "ReturnsSeries",
    "LatentState",
    "dejd_pdf",
    "simulate",
    "PriorSpec",
    "preset",
    "Chain",
    "ChainConfig",
    "run_chain",
    "summarize",
    "jump_probabilities",
    "detect_jumps",
]
