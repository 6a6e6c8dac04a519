"""The DEJD data model: parameters, densities, likelihood and simulation.

Returns follow a two-component mixture per time step of length ``delta``:
with weight ``1/(1+L)`` a pure diffusion step ``N(mu' delta, delta/h)`` and
with weight ``L/(1+L)`` the same step plus one double exponential jump.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .distributions import LOG_2PI, ParameterError, RngStream

__all__ = [
    "DEFAULT_DELTA",
    "InputError",
    "ModelParams",
    "ReturnsSeries",
    "LatentState",
    "SufficientStats",
    "diffusion_log_pdf",
    "diffusion_pdf",
    "jump_diffusion_log_pdf",
    "jump_diffusion_pdf",
    "dejd_log_pdf",
    "dejd_pdf",
    "kou_to_dejd_intensity",
    "dejd_to_kou_intensity",
    "conditional_log_likelihood",
    "stats_log_likelihood",
    "sufficient_stats",
    "simulate",
    "simulate_returns",
]

DEFAULT_DELTA = 1.0 / 252.0


class InputError(ValueError):
    """Inconsistent data passed to a model routine."""


@dataclass(frozen=True)
class ModelParams:
    """Parameter state in the sampling parametrization.

    ``mu_prime`` is the annualized log drift ``mu - sigma^2/2``, ``h`` the
    diffusion precision ``1/sigma^2`` and ``L`` the per-step jump weight
    ``lambda * delta``.
    """

    mu_prime: float
    h: float
    L: float
    p_U: float
    eta_U: float
    eta_D: float

    def __post_init__(self):
        if not math.isfinite(self.mu_prime):
            raise ParameterError(f"mu_prime must be finite, got {self.mu_prime}")
        for name in ("h", "L", "eta_U", "eta_D"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive, got {v}")
        if not 0.0 < self.p_U < 1.0:
            raise ParameterError(f"p_U must lie in (0, 1), got {self.p_U}")

    @classmethod
    def from_natural(cls, mu, sigma, lam, p_U, eta_U, eta_D, delta=DEFAULT_DELTA):
        """Build from ``(mu, sigma, lambda, p_U, eta_U, eta_D)``."""
        if not sigma > 0:
            raise ParameterError(f"sigma must be positive, got {sigma}")
        return cls(
            mu_prime=mu - 0.5 * sigma * sigma,
            h=1.0 / (sigma * sigma),
            L=lam * delta,
            p_U=p_U,
            eta_U=eta_U,
            eta_D=eta_D,
        )

    @property
    def sigma(self) -> float:
        return 1.0 / math.sqrt(self.h)

    @property
    def variance(self) -> float:
        return 1.0 / self.h

    @property
    def mu(self) -> float:
        return self.mu_prime + 0.5 / self.h

    @property
    def p_D(self) -> float:
        return 1.0 - self.p_U

    def intensity(self, delta: float = DEFAULT_DELTA) -> float:
        """Jump intensity ``lambda = L / delta``."""
        return self.L / delta

    def diffusion_weight(self) -> float:
        return 1.0 / (1.0 + self.L)

    def as_tuple(self):
        return (self.mu_prime, self.h, self.L, self.p_U, self.eta_U, self.eta_D)


@dataclass(frozen=True)
class ReturnsSeries:
    """Daily log-returns with a fixed step ``delta`` (years)."""

    values: np.ndarray
    delta: float = DEFAULT_DELTA
    labels: tuple | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size < 2:
            raise InputError(f"need at least 2 returns, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise InputError("returns must be finite")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise InputError(f"delta must be positive, got {self.delta}")
        if self.labels is not None and len(self.labels) != values.size:
            raise InputError("labels must match the number of returns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class LatentState:
    """Per-step regime labels ``xi`` in {-1, 0, 1} and jump sizes ``J``."""

    xi: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=np.int8).ravel()
        J = np.asarray(self.J, dtype=float).ravel()
        if xi.shape != J.shape:
            raise InputError("xi and J must have the same length")
        if not np.all(np.isin(xi, (-1, 0, 1))):
            raise InputError("xi labels must be -1, 0 or 1")
        if np.any((xi == 0) != (J == 0)) or np.any((xi == -1) & ~(J < 0)) or np.any((xi == 1) & ~(J > 0)):
            raise InputError("jump sizes inconsistent with regime labels")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "J", J)

    def __len__(self):
        return self.xi.size

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n, dtype=np.int8), np.zeros(n))


@dataclass(frozen=True)
class SufficientStats:
    """Data summaries that the full conditionals depend on."""

    xbar: float
    jbar: float
    s: float
    n: int
    n_minus1: int
    n_0: int
    n_1: int
    N_DJ: float
    N_UJ: float

    @property
    def N(self) -> int:
        return self.n_minus1 + self.n_1

    @classmethod
    def empty(cls):
        return cls(0.0, 0.0, 0.0, 0, 0, 0, 0, 0.0, 0.0)


def _check_delta(delta):
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")


# --- densities ---------------------------------------------------------------

def diffusion_log_pdf(x, params: ModelParams, delta=DEFAULT_DELTA):
    _check_delta(delta)
    var = delta / params.h
    x = np.asarray(x, dtype=float)
    return -0.5 * (LOG_2PI + math.log(var)) - 0.5 * (x - params.mu_prime * delta) ** 2 / var


def diffusion_pdf(x, params: ModelParams, delta=DEFAULT_DELTA):
    """Normal density with mean ``mu' delta`` and variance ``sigma^2 delta``."""
    return np.exp(diffusion_log_pdf(x, params, delta))


def _jump_branch_log_terms(x, params: ModelParams, delta):
    """Log of the one-jump convolution, split into down and up branches.

    Neither branch includes the ``p_D``/``p_U`` weight.
    """
    x = np.asarray(x, dtype=float)
    var = delta / params.h
    sd = math.sqrt(var)
    r = x - params.mu_prime * delta
    eD, eU = params.eta_D, params.eta_U
    down = math.log(eD) + eD * r + 0.5 * var * eD * eD + special.log_ndtr(-(r + var * eD) / sd)
    up = math.log(eU) - eU * r + 0.5 * var * eU * eU + special.log_ndtr((r - var * eU) / sd)
    return down, up


def jump_diffusion_log_pdf(x, params: ModelParams, delta=DEFAULT_DELTA):
    """Log density of a diffusion step plus one double exponential jump."""
    _check_delta(delta)
    down, up = _jump_branch_log_terms(x, params, delta)
    return np.logaddexp(math.log(params.p_D) + down, math.log(params.p_U) + up)


def jump_diffusion_pdf(x, params: ModelParams, delta=DEFAULT_DELTA):
    return np.exp(jump_diffusion_log_pdf(x, params, delta))


def dejd_log_pdf(x, params: ModelParams, delta=DEFAULT_DELTA):
    log_norm = math.log1p(params.L)
    return np.logaddexp(
        diffusion_log_pdf(x, params, delta) - log_norm,
        math.log(params.L) - log_norm + jump_diffusion_log_pdf(x, params, delta),
    )


def dejd_pdf(x, params: ModelParams, delta=DEFAULT_DELTA):
    """Mixture density ``f_X/(1+L) + L f_{X+Q}/(1+L)``."""
    return np.exp(dejd_log_pdf(x, params, delta))


def kou_to_dejd_intensity(lambda_kou: float, delta: float = DEFAULT_DELTA) -> float:
    """Intensity giving the same mixture weights under the DEJD weighting.

    Kou weights the jump component by ``lambda delta`` and requires
    ``lambda delta < 1``.
    """
    _check_delta(delta)
    if not lambda_kou > 0:
        raise ParameterError(f"intensity must be positive, got {lambda_kou}")
    if lambda_kou * delta >= 1.0:
        raise ParameterError(
            f"Kou intensity requires lambda*delta < 1, got {lambda_kou * delta}"
        )
    return lambda_kou / (1.0 - lambda_kou * delta)


def dejd_to_kou_intensity(lambda_dejd: float, delta: float = DEFAULT_DELTA) -> float:
    _check_delta(delta)
    if not lambda_dejd > 0:
        raise ParameterError(f"intensity must be positive, got {lambda_dejd}")
    return lambda_dejd / (1.0 + lambda_dejd * delta)


# --- likelihood ----------------------------------------------------------------

def _check_lengths(x: ReturnsSeries, latents: LatentState):
    if len(x) != len(latents):
        raise InputError(f"latent length {len(latents)} != series length {len(x)}")


def conditional_log_likelihood(x: ReturnsSeries, params: ModelParams, latents: LatentState) -> float:
    """Sum over steps of ``log N(x_i; mu' delta + J_i, delta/h)``."""
    _check_lengths(x, latents)
    delta = x.delta
    var = delta / params.h
    resid = x.values - params.mu_prime * delta - latents.J
    return float(-0.5 * len(x) * (LOG_2PI + math.log(var)) - 0.5 * np.sum(resid * resid) / var)


def stats_log_likelihood(stats: SufficientStats, mu_prime: float, h: float, delta: float) -> float:
    """Likelihood written through the sufficient statistics, constants dropped."""
    n = stats.n
    m = (stats.xbar - stats.jbar) / delta
    return 0.5 * n * math.log(h) - 0.5 * h * (n * stats.s / delta + n * delta * (m - mu_prime) ** 2)


def sufficient_stats(x: ReturnsSeries, latents: LatentState) -> SufficientStats:
    _check_lengths(x, latents)
    return _stats_from_arrays(x.values, latents.xi, latents.J)


def _stats_from_arrays(values, xi, J) -> SufficientStats:
    n = values.size
    if n == 0:
        return SufficientStats.empty()
    resid = values - J
    rbar = resid.mean()
    # two-pass centered sum; numpy sums pairwise
    dev = resid - rbar
    s = float(np.dot(dev, dev) / n)
    n_minus1 = int(np.count_nonzero(xi == -1))
    n_1 = int(np.count_nonzero(xi == 1))
    return SufficientStats(
        xbar=float(values.mean()),
        jbar=float(J.mean()),
        s=s,
        n=n,
        n_minus1=n_minus1,
        n_0=n - n_minus1 - n_1,
        n_1=n_1,
        N_DJ=float(J[J < 0].sum()),
        N_UJ=float(J[J > 0].sum()),
    )


# --- simulation ------------------------------------------------------------------

TINY_JUMP = np.finfo(float).tiny


def regime_weights(params: ModelParams):
    """Prior probabilities of (down jump, no jump, up jump) per step."""
    jump = params.L / (1.0 + params.L)
    return jump * params.p_D, 1.0 / (1.0 + params.L), jump * params.p_U


def simulate_latents(params: ModelParams, n: int, rng: RngStream) -> LatentState:
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    g = rng.generator
    w_down, w_zero, _ = regime_weights(params)
    u = g.random(n)
    xi = np.where(u < w_down, -1, np.where(u < w_down + w_zero, 0, 1)).astype(np.int8)
    e = g.standard_exponential(n)
    # exponential draws are >= 0; nudge the measure-zero 0 off the boundary
    e = np.maximum(e, TINY_JUMP)
    J = np.where(xi == -1, -e / params.eta_D, np.where(xi == 1, e / params.eta_U, 0.0))
    return LatentState(xi, J)


def simulate_returns(params: ModelParams, latents: LatentState, delta: float, rng: RngStream) -> np.ndarray:
    """Draw ``x_i ~ N(mu' delta + J_i, delta/h)`` given the jump sizes."""
    _check_delta(delta)
    sd = math.sqrt(delta / params.h)
    return params.mu_prime * delta + latents.J + sd * rng.generator.standard_normal(len(latents))


def simulate(params: ModelParams, n: int, delta: float, rng: RngStream):
    """Simulate ``n`` returns from the one-jump-per-step model.

    Returns
    -------
    (ReturnsSeries, LatentState)
        The series and the regime labels and jumps that generated it.
    """
    _check_delta(delta)
    if n < 2:
        raise ParameterError(f"a ReturnsSeries needs n >= 2, got {n}")
    latents = simulate_latents(params, n, rng)
    values = simulate_returns(params, latents, delta, rng)
    return ReturnsSeries(values, delta), latents
