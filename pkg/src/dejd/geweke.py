"""Joint-distribution ("getting it right") check of the Gibbs sampler.

Two samplers of the joint law of parameters, latents and data are compared:

* marginal-conditional: parameters from the prior, latents and returns
  forward from the model, independently for every sample;
* successive-conditional: chains alternating a full Gibbs sweep with a
  fresh draw of the returns given parameters and jumps.

Both target the same joint distribution, so every test function must have
the same mean under both. A wrong full conditional shows up as a shifted
mean in the second sampler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import RngStream
from .model import _stats_from_arrays, simulate_latents, simulate_returns
from .priors import PriorSpec, prior_sample, prior_sample_arrays
from .sampler import SweepCounters, _theta_update, update_latents

TEST_FUNCTIONS = ("mu_prime", "h", "L", "p_U", "eta_D", "eta_U", "n_1", "n_minus1")


def marginal_conditional(spec: PriorSpec, n: int, size: int, delta: float, rng: RngStream) -> dict:
    """Independent forward draws; returns test-function arrays keyed by name."""
    theta = prior_sample_arrays(spec, rng, size)
    L = theta["L"]
    jump = L / (1.0 + L)
    w_down = jump * (1.0 - theta["p_U"])
    w_zero = 1.0 / (1.0 + L)
    u = rng.generator.random((size, n))
    xi = np.where(u < w_down[:, None], -1, np.where(u < (w_down + w_zero)[:, None], 0, 1))
    out = {k: theta[k] for k in ("mu_prime", "h", "L", "p_U", "eta_D", "eta_U")}
    out["n_1"] = (xi == 1).sum(axis=1).astype(float)
    out["n_minus1"] = (xi == -1).sum(axis=1).astype(float)
    return out


def _successive_chain(spec: PriorSpec, n: int, length: int, delta: float, rng: RngStream,
                      L_sampler: str, backend, cols: dict, offset: int) -> None:
    # start from an exact forward draw so every state is a draw from the joint
    params = prior_sample(spec, rng)
    latents = simulate_latents(params, n, rng)
    x = simulate_returns(params, latents, delta, rng)
    xi = np.asarray(latents.xi).copy()
    J = np.asarray(latents.J).copy()
    counters = SweepCounters()
    for t in range(offset, offset + length):
        update_latents(x, params, delta, rng, backend, xi, J)
        stats = _stats_from_arrays(x, xi, J)
        params = _theta_update(params, stats, spec, delta, L_sampler, rng, counters)
        x = params.mu_prime * delta + J + math.sqrt(delta / params.h) * rng.generator.standard_normal(n)
        cols["mu_prime"][t] = params.mu_prime
        cols["h"][t] = params.h
        cols["L"][t] = params.L
        cols["p_U"][t] = params.p_U
        cols["eta_D"][t] = params.eta_D
        cols["eta_U"][t] = params.eta_U
        cols["n_1"][t] = stats.n_1
        cols["n_minus1"][t] = stats.n_minus1


def successive_conditional(spec: PriorSpec, n: int, size: int, delta: float, rng: RngStream,
                           n_chains: int = 500, L_sampler: str = "auto", backend=None) -> dict:
    """States from ``n_chains`` chains alternating a Gibbs sweep and a data redraw.

    The data redraw keeps the jump sizes, so a single chain moves slowly
    between states with and without jumps. Running many chains, each started
    from an exact joint draw, keeps every state exactly distributed under a
    correct sampler and makes the chains independent of one another.
    Returns test-function arrays of shape ``(n_chains, size // n_chains)``.
    """
    if n_chains < 2 or size < n_chains:
        raise ValueError("need at least two chains and one state per chain")
    backend = kernels.get_backend(backend)
    length = size // n_chains
    cols = {k: np.empty(n_chains * length) for k in TEST_FUNCTIONS}
    for c in range(n_chains):
        _successive_chain(spec, n, length, delta, rng.substream(f"chain{c}"), L_sampler,
                          backend, cols, c * length)
    return {k: v.reshape(n_chains, length) for k, v in cols.items()}


@dataclass
class GewekeResult:
    z: dict
    mean_marginal: dict
    mean_successive: dict

    def max_abs_z(self) -> float:
        return max(abs(v) for v in self.z.values())


def geweke_test(spec: PriorSpec, n: int = 20, size: int = 50_000, delta: float = 1.0 / 252.0,
                seed: int = 1, n_chains: int = 500, L_sampler: str = "auto", backend=None) -> GewekeResult:
    """Standardized mean differences for every test function.

    The successive side's standard error comes from the spread of the
    per-chain means, which needs no assumption about mixing.
    """
    root = RngStream(seed)
    mc = marginal_conditional(spec, n, size, delta, root.substream("marginal"))
    sc = successive_conditional(spec, n, size, delta, root.substream("successive"),
                                n_chains, L_sampler, backend)
    z, m1, m2 = {}, {}, {}
    for k in TEST_FUNCTIONS:
        a, chain_means = mc[k], sc[k].mean(axis=1)
        se = math.sqrt(a.var(ddof=1) / a.size + chain_means.var(ddof=1) / chain_means.size)
        m1[k], m2[k] = float(a.mean()), float(chain_means.mean())
        z[k] = (m1[k] - m2[k]) / se if se > 0 else 0.0
    return GewekeResult(z, m1, m2)
