"""Gibbs sampler for the Bayesian DEJD model.

One sweep updates, in order: every ``(xi_i, J_i)`` from its exact conditional,
then ``(mu', h)`` jointly (gamma-normal), ``L`` (independence
Metropolis-Hastings or acceptance-rejection), ``p_U`` (beta) and
``(eta_D, eta_U)`` (independent gammas).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .distributions import (
    GammaGammaParams,
    RngStream,
    gamma_gamma_sample,
    gamma_sample,
    beta_sample,
    truncated_normal_sample,
)
from .model import (
    LatentState,
    ModelParams,
    ReturnsSeries,
    SufficientStats,
    _stats_from_arrays,
)
from .priors import PriorSpec, prior_sample

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "NumericError",
    "FallbackRequired",
    "ar_condition",
    "draw_L_mh_batch",
    "ChainConfig",
    "Chain",
    "SweepCounters",
    "CHAIN_COLUMNS",
    "mu_h_conditional",
    "draw_mu_h",
    "L_log_target",
    "L_mh_log_ratio",
    "draw_L_mh",
    "draw_L_ar",
    "draw_L_ar_batch",
    "p_U_conditional",
    "draw_p_U",
    "eta_conditional",
    "draw_etas",
    "xi_posterior",
    "draw_xi_J",
    "update_latents",
    "sweep",
    "run_chain",
]

CHAIN_COLUMNS = ("mu_prime", "h", "L", "p_U", "eta_D", "eta_U", "n_minus1", "n_1")

L_SAMPLERS = {
    "metropolis_hastings": "metropolis_hastings",
    "mh": "metropolis_hastings",
    "acceptance_rejection": "acceptance_rejection",
    "ar": "acceptance_rejection",
    "auto": "auto",
}

_AR_MAX_TRIALS = 100_000
# in auto mode a step that has not accepted after this many candidates is
# handed to MH; the budget does not depend on the current L, so the mixed
# kernel still leaves the conditional invariant
_AR_AUTO_BUDGET = 200


class ConfigError(ValueError):
    """Invalid run configuration."""


class NumericError(RuntimeError):
    """A sampler step failed numerically."""


class FallbackRequired(ValueError):
    """Acceptance-rejection for ``L`` is not applicable (needs ``n - N - nu_L/2 > 0``)."""


@dataclass(frozen=True)
class ChainConfig:
    """Run-length and sampler settings for :func:`run_chain`.

    ``init`` is either ``None`` (draw the starting parameters from the prior)
    or a :class:`ModelParams`.
    """

    burn_in: int = 1000
    draws: int = 1000
    thin: int = 1
    L_sampler: str = "auto"
    seed: int = 1
    init: ModelParams | None = None
    store_latents: bool = False
    kernels: str = "auto"

    def __post_init__(self):
        for name, lo in (("burn_in", 0), ("draws", 1), ("thin", 1)):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < lo:
                raise ConfigError(f"{name} must be an integer >= {lo}, got {v!r}")
        if self.L_sampler not in L_SAMPLERS:
            raise ConfigError(f"L_sampler must be one of {sorted(L_SAMPLERS)}, got {self.L_sampler!r}")
        object.__setattr__(self, "L_sampler", L_SAMPLERS[self.L_sampler])
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.init is not None and not isinstance(self.init, ModelParams):
            raise ConfigError("init must be None (prior draw) or ModelParams")
        if self.kernels not in ("auto",) + kernels.BACKENDS:
            raise ConfigError(f"kernels must be auto, compiled or python, got {self.kernels!r}")

    @property
    def n_samples(self) -> int:
        return self.draws // self.thin


@dataclass
class SweepCounters:
    """Acceptance bookkeeping for the ``L`` step."""

    mh_proposals: int = 0
    mh_accepted: int = 0
    ar_draws: int = 0
    ar_trials: int = 0
    ar_fallbacks: int = 0

    def as_dict(self):
        d = dict(self.__dict__)
        d["mh_acceptance_rate"] = self.mh_accepted / self.mh_proposals if self.mh_proposals else None
        d["ar_acceptance_rate"] = self.ar_draws / self.ar_trials if self.ar_trials else None
        return d


@dataclass
class Chain:
    """Retained draws of one run.

    ``values`` has one row per retained draw and columns :data:`CHAIN_COLUMNS`.
    ``count_minus`` / ``count_plus`` count, per observation, the retained draws
    with ``xi_i = -1`` / ``xi_i = +1``.
    """

    sweep_index: np.ndarray
    values: np.ndarray
    count_minus: np.ndarray | None
    count_plus: np.ndarray | None
    config: ChainConfig
    delta: float
    counters: SweepCounters = field(default_factory=SweepCounters)
    latent_xi: np.ndarray | None = None
    latent_J: np.ndarray | None = None
    backend: str = "python"

    def __len__(self):
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, CHAIN_COLUMNS.index(name)]
        except ValueError:
            raise KeyError(f"unknown chain column {name!r}") from None

    def params(self, i: int) -> ModelParams:
        row = self.values[i]
        return ModelParams(mu_prime=row[0], h=row[1], L=row[2], p_U=row[3], eta_U=row[5], eta_D=row[4])


# --- closed-form conditionals ---------------------------------------------------

def mu_h_conditional(stats: SufficientStats, spec: PriorSpec, delta: float):
    """Parameters of the gamma-normal conditional of ``(mu', h)``.

    Returns ``(shape, rate, mean, scale)``: ``h ~ Gamma(shape, rate)`` and
    ``mu' | h ~ N(mean, 1 / (h * scale))``.
    """
    n = stats.n
    if n == 0:
        return spec.nu_h, spec.A_h, spec.mu0, spec.A_mu
    m = (stats.xbar - stats.jbar) / delta
    denom = spec.A_mu + n * delta
    shape = 0.5 * n + spec.nu_h
    rate = 0.5 * n * stats.s / delta + spec.A_h + 0.5 * spec.A_mu * n * delta * (spec.mu0 - m) ** 2 / denom
    mean = (spec.mu0 * spec.A_mu + (stats.xbar - stats.jbar) * n) / denom
    return shape, rate, mean, denom


def draw_mu_h(stats: SufficientStats, spec: PriorSpec, delta: float, rng: RngStream):
    shape, rate, mean, scale = mu_h_conditional(stats, spec, delta)
    h = gamma_sample(shape, rate, rng)
    mu_prime = rng.generator.normal(mean, 1.0 / math.sqrt(h * scale))
    return float(mu_prime), h


def L_log_target(L, N, n, nu_L):
    """Unnormalized log conditional density of ``L``."""
    L = np.asarray(L, dtype=float)
    with np.errstate(divide="ignore"):
        return (N + 0.5 * nu_L - 1.0) * np.log(L) - 0.5 * L - n * np.log1p(L)


def L_mh_log_ratio(L_new: float, L_old: float, n: int) -> float:
    """Log acceptance ratio of the independence proposal ``(2n+1) L ~ chi2(2N + nu_L)``.

    The proposal is Gamma(N + nu_L/2, rate (2n+1)/2), so target over proposal
    is ``exp(n L) (1+L)^-n`` up to a constant.
    """
    return n * (L_new - L_old) - n * (math.log1p(L_new) - math.log1p(L_old))


def draw_L_mh(current_L: float, N: int, n: int, nu_L: float, rng: RngStream):
    """One independence Metropolis-Hastings step for ``L``.

    Returns ``(L, accepted)``.
    """
    proposal = gamma_sample(N + 0.5 * nu_L, 0.5 * (2 * n + 1), rng)
    log_ratio = min(L_mh_log_ratio(proposal, current_L, n), 0.0)
    if math.log(rng.uniform()) <= log_ratio:
        return proposal, True
    return current_L, False


def draw_L_mh_batch(current_L: np.ndarray, N: int, n: int, nu_L: float, rng: RngStream):
    """One MH step for each of several independent chains sharing ``(N, n)``.

    Returns ``(L, accepted)`` arrays shaped like ``current_L``.
    """
    current_L = np.asarray(current_L, dtype=float)
    proposal = gamma_sample(N + 0.5 * nu_L, 0.5 * (2 * n + 1), rng, current_L.size).reshape(current_L.shape)
    log_ratio = n * (proposal - current_L) - n * (np.log1p(proposal) - np.log1p(current_L))
    accepted = np.log(rng.uniform(current_L.size)).reshape(current_L.shape) <= np.minimum(log_ratio, 0.0)
    return np.where(accepted, proposal, current_L), accepted


def ar_condition(N: int, n: int, nu_L: float) -> bool:
    """Whether the gamma-gamma proposal exists (``n - N - nu_L/2 > 0``)."""
    return n - N - 0.5 * nu_L > 0


def _draw_L_ar(N, n, nu_L, rng: RngStream, max_trials=_AR_MAX_TRIALS, on_exhausted=None):
    alpha = n - N - 0.5 * nu_L
    if not alpha > 0:
        raise FallbackRequired(f"acceptance-rejection needs n - N - nu_L/2 > 0, got {alpha}")
    proposal = GammaGammaParams(alpha=alpha, beta=1.0, n=N + 0.5 * nu_L)
    for trial in range(1, max_trials + 1):
        L = gamma_gamma_sample(proposal, rng)
        if math.log(rng.uniform()) <= -0.5 * L:
            return L, trial
    if on_exhausted is not None:
        raise on_exhausted
    raise NumericError(f"acceptance-rejection for L did not accept in {max_trials} trials")


def draw_L_ar(N: int, n: int, nu_L: float, rng: RngStream) -> float:
    """Exact draw of ``L`` by acceptance-rejection from a gamma-gamma proposal.

    The proposal ``Gg(n - N - nu_L/2, 1, N + nu_L/2)`` has density
    proportional to ``L^(N + nu_L/2 - 1) (1 + L)^-n``, so each candidate is
    kept with probability ``exp(-L/2)``.

    Raises
    ------
    FallbackRequired
        If ``n - N - nu_L/2 <= 0``.
    """
    return _draw_L_ar(N, n, nu_L, rng)[0]


def draw_L_ar_batch(N: int, n: int, nu_L: float, rng: RngStream, size: int) -> np.ndarray:
    """``size`` independent acceptance-rejection draws of ``L`` (vectorized)."""
    alpha = n - N - 0.5 * nu_L
    if not alpha > 0:
        raise FallbackRequired(f"acceptance-rejection needs n - N - nu_L/2 > 0, got {alpha}")
    proposal = GammaGammaParams(alpha=alpha, beta=1.0, n=N + 0.5 * nu_L)
    out = np.empty(0)
    while out.size < size:
        m = int(1.2 * (size - out.size)) + 16
        L = gamma_gamma_sample(proposal, rng, m)
        keep = np.log(rng.uniform(m)) <= -0.5 * L
        out = np.concatenate([out, L[keep]])
    return out[:size]


def p_U_conditional(stats: SufficientStats, spec: PriorSpec):
    return stats.n_1 + spec.a_U, stats.n_minus1 + spec.b_U


def draw_p_U(stats: SufficientStats, spec: PriorSpec, rng: RngStream) -> float:
    a, b = p_U_conditional(stats, spec)
    return beta_sample(a, b, rng)


def eta_conditional(stats: SufficientStats, spec: PriorSpec):
    """``((shape_D, rate_D), (shape_U, rate_U))`` of the gamma conditionals."""
    return (
        (stats.n_minus1 + spec.nu_etaD, spec.A_etaD - stats.N_DJ),
        (stats.n_1 + spec.nu_etaU, spec.A_etaU + stats.N_UJ),
    )


def draw_etas(stats: SufficientStats, spec: PriorSpec, rng: RngStream):
    """Returns ``(eta_D, eta_U)``."""
    (sd, rd), (su, ru) = eta_conditional(stats, spec)
    return gamma_sample(sd, rd, rng), gamma_sample(su, ru, rng)


# --- latent variables --------------------------------------------------------------

def xi_posterior(x_i: float, params: ModelParams, delta: float):
    """``(P(xi=-1), P(xi=0), P(xi=+1))`` given one return and the parameters."""
    pm, pz, pp = kernels._pykernels.xi_probabilities(
        np.array([x_i], dtype=float), *_kernel_args(params, delta)
    )
    return float(pm[0]), float(pz[0]), float(pp[0])


def _kernel_args(params: ModelParams, delta: float):
    return (params.mu_prime, params.h, params.L, params.p_U, params.eta_U, params.eta_D, delta)


def jump_conditional(x_i: float, params: ModelParams, delta: float, xi: int):
    """Mean and variance of the (untruncated) normal behind ``J_i | xi_i``."""
    var = delta / params.h
    r = x_i - params.mu_prime * delta
    if xi == -1:
        return r + var * params.eta_D, var
    if xi == 1:
        return r - var * params.eta_U, var
    raise ValueError("jump conditional is only defined for xi = -1 or 1")


def draw_xi_J(x_i: float, params: ModelParams, delta: float, rng: RngStream):
    """Draw ``(xi_i, J_i)`` for a single observation."""
    pm, pz, _ = xi_posterior(x_i, params, delta)
    u = rng.generator.random()
    if u < pm:
        xi = -1
    elif u < pm + pz:
        return 0, 0.0
    else:
        xi = 1
    mean, var = jump_conditional(x_i, params, delta, xi)
    return xi, truncated_normal_sample(mean, var, "negative" if xi == -1 else "positive", rng)


def update_latents(x: np.ndarray, params: ModelParams, delta: float, rng: RngStream,
                   backend=None, xi_out=None, J_out=None):
    """Draw all ``(xi_i, J_i)`` with the selected kernel backend.

    Uses exactly ``2 n`` uniforms from ``rng`` so that results do not depend
    on how many observations jump.
    """
    module = backend if backend is not None else kernels.default
    n = x.size
    xi_out = np.empty(n, dtype=np.int8) if xi_out is None else xi_out
    J_out = np.empty(n) if J_out is None else J_out
    u = rng.generator.random(2 * n)
    u_xi = u[:n]
    u_j = 1.0 - u[n:]
    module.update_latents(x, *_kernel_args(params, delta), u_xi, u_j, xi_out, J_out)
    return xi_out, J_out


# --- sweep and chain ------------------------------------------------------------------

def _draw_L(current_L, stats, spec, method, rng, counters: SweepCounters):
    N, n = stats.N, stats.n
    if method in ("acceptance_rejection", "auto"):
        try:
            if method == "auto":
                L, trials = _draw_L_ar(N, n, spec.nu_L, rng, _AR_AUTO_BUDGET,
                                       FallbackRequired("acceptance-rejection budget exhausted"))
            else:
                L, trials = _draw_L_ar(N, n, spec.nu_L, rng)
        except FallbackRequired:
            if method == "acceptance_rejection":
                raise
            counters.ar_fallbacks += 1
        else:
            counters.ar_draws += 1
            counters.ar_trials += trials
            return L
    L, accepted = draw_L_mh(current_L, N, n, spec.nu_L, rng)
    counters.mh_proposals += 1
    counters.mh_accepted += int(accepted)
    return L


def _theta_update(params: ModelParams, stats: SufficientStats, spec: PriorSpec, delta: float,
                  L_sampler: str, rng: RngStream, counters: SweepCounters) -> ModelParams:
    mu_prime, h = draw_mu_h(stats, spec, delta, rng)
    L = _draw_L(params.L, stats, spec, L_sampler, rng, counters)
    p_U = draw_p_U(stats, spec, rng)
    eta_D, eta_U = draw_etas(stats, spec, rng)
    return ModelParams(mu_prime=mu_prime, h=h, L=L, p_U=p_U, eta_U=eta_U, eta_D=eta_D)


def sweep(x: ReturnsSeries, state, spec: PriorSpec, cfg: ChainConfig, rng: RngStream,
          counters: SweepCounters | None = None):
    """One full Gibbs cycle; ``state`` is ``(ModelParams, LatentState)``."""
    params, latents = state
    if len(latents) != len(x):
        raise ValueError("latent state length does not match the series")
    counters = SweepCounters() if counters is None else counters
    backend = kernels.get_backend(cfg.kernels)
    xi, J = update_latents(x.values, params, x.delta, rng, backend)
    stats = _stats_from_arrays(x.values, xi, J)
    new_params = _theta_update(params, stats, spec, x.delta, cfg.L_sampler, rng, counters)
    return new_params, LatentState(xi, J)


def run_chain(x: ReturnsSeries, spec: PriorSpec, cfg: ChainConfig, progress=None) -> Chain:
    """Run burn-in then ``cfg.draws`` sweeps, keeping every ``cfg.thin``-th state.

    ``progress``, if given, is called as ``progress(done, total)`` every few
    hundred sweeps.
    """
    if not isinstance(cfg, ChainConfig):
        raise ConfigError("cfg must be a ChainConfig")
    if len(x) < 2:
        raise ConfigError("need at least 2 observations")
    backend = kernels.get_backend(cfg.kernels)
    root = RngStream(cfg.seed)
    init_rng = root.substream("init")
    rng = root.substream("sweep")
    values_x = np.ascontiguousarray(x.values)
    delta = x.delta
    n = values_x.size

    params = cfg.init if cfg.init is not None else prior_sample(spec, init_rng)
    xi = np.empty(n, dtype=np.int8)
    J = np.empty(n)
    update_latents(values_x, params, delta, init_rng, backend, xi, J)

    m = cfg.n_samples
    out = np.empty((m, len(CHAIN_COLUMNS)))
    sweep_index = np.empty(m, dtype=np.int64)
    count_minus = np.zeros(n, dtype=np.int64)
    count_plus = np.zeros(n, dtype=np.int64)
    latent_xi = np.empty((m, n), dtype=np.int8) if cfg.store_latents else None
    latent_J = np.empty((m, n)) if cfg.store_latents else None
    counters = SweepCounters()
    total = cfg.burn_in + cfg.draws
    k = 0
    for it in range(total):
        update_latents(values_x, params, delta, rng, backend, xi, J)
        stats = _stats_from_arrays(values_x, xi, J)
        params = _theta_update(params, stats, spec, delta, cfg.L_sampler, rng, counters)
        post = it - cfg.burn_in + 1
        if post > 0 and post % cfg.thin == 0 and k < m:
            out[k] = (params.mu_prime, params.h, params.L, params.p_U, params.eta_D,
                      params.eta_U, stats.n_minus1, stats.n_1)
            sweep_index[k] = post
            count_minus += xi == -1
            count_plus += xi == 1
            if cfg.store_latents:
                latent_xi[k] = xi
                latent_J[k] = J
            k += 1
        if progress is not None and (it + 1) % 500 == 0:
            progress(it + 1, total)
    return Chain(
        sweep_index=sweep_index,
        values=out,
        count_minus=count_minus,
        count_plus=count_plus,
        config=cfg,
        delta=delta,
        counters=counters,
        latent_xi=latent_xi,
        latent_J=latent_J,
        backend=kernels.backend_name(backend),
    )
