"""Random variates and densities used by the sampler.

Every sampler takes an explicit :class:`RngStream`; there is no module-level
generator. Samplers accept an optional ``size`` and then return arrays,
otherwise a Python float.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "ParameterError",
    "RngStream",
    "GammaGammaParams",
    "normal_sample",
    "truncated_normal_sample",
    "gamma_sample",
    "beta_sample",
    "gamma_gamma_sample",
    "gamma_gamma_log_pdf",
    "double_exp_pdf",
    "double_exp_log_pdf",
    "normal_log_pdf",
    "normal_log_cdf",
]

LOG_2PI = math.log(2.0 * math.pi)
TINY = np.finfo(float).tiny

# Standardized truncation point beyond which the exponential-proposal
# rejection sampler replaces the inverse CDF.
_TAIL_SWITCH = 2.5


class ParameterError(ValueError):
    """A distribution parameter is outside its domain."""


class RngStream:
    """Seeded random stream backed by numpy's PCG64.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.
    label : str, optional
        Substream label; ``RngStream(seed, label)`` is what
        :meth:`substream` returns.
    """

    def __init__(self, seed: int, label: str | None = None):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.label = label
        spawn_key = () if label is None else (_label_key(label),)
        self._seq = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def substream(self, label: str) -> "RngStream":
        """Independent stream determined by ``(seed, label)``."""
        full = label if self.label is None else f"{self.label}/{label}"
        return RngStream(self.seed, full)

    def uniform(self, size=None):
        """Uniform draws on the open-left interval (0, 1]."""
        return 1.0 - self.generator.random(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, label={self.label!r})"


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class GammaGammaParams:
    """Compound gamma: ``rate ~ Gamma(alpha, beta)`` then ``x ~ Gamma(n, rate)``."""

    alpha: float
    beta: float
    n: float

    def __post_init__(self):
        for name in ("alpha", "beta", "n"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"gamma-gamma {name} must be positive, got {v}")


def _check_positive(name, value):
    if not np.all(np.isfinite(value)) or not np.all(np.asarray(value) > 0):
        raise ParameterError(f"{name} must be positive and finite, got {value}")


def _out(values, size):
    return values if size is not None else float(values)


def normal_sample(mean, variance, rng: RngStream, size=None):
    """Draw from N(mean, variance)."""
    _check_positive("variance", variance)
    return _out(rng.generator.normal(mean, np.sqrt(variance), size), size)


def _std_tail(b: np.ndarray, rng: RngStream) -> np.ndarray:
    """Standard normal draws conditioned on ``w > b`` (elementwise)."""
    w = np.empty_like(b)
    bulk = b < _TAIL_SWITCH
    if bulk.any():
        bb = b[bulk]
        u = rng.uniform(bb.shape)
        w[bulk] = -special.ndtri(u * special.ndtr(-bb))
    tail = np.flatnonzero(~bulk)
    while tail.size:
        bt = b[tail]
        alpha = 0.5 * (bt + np.sqrt(bt * bt + 4.0))
        z = bt + rng.generator.standard_exponential(tail.size) / alpha
        accept = rng.uniform(tail.size) <= np.exp(-0.5 * (z - alpha) ** 2)
        w[tail[accept]] = z[accept]
        tail = tail[~accept]
    return w


def truncated_normal_sample(mean, variance, side: str, rng: RngStream, size=None):
    """Draw from N(mean, variance) restricted to one half-line.

    ``side="negative"`` restricts to (-inf, 0), ``side="positive"`` to (0, inf).
    Uses the inverse CDF while the truncation point is within a couple of
    standard deviations of the mean and Robert's exponential-proposal
    rejection sampler further out.
    """
    _check_positive("variance", variance)
    if side not in ("negative", "positive"):
        raise ParameterError(f"side must be 'negative' or 'positive', got {side!r}")
    shape = () if size is None else size
    mean = np.broadcast_to(np.asarray(mean, dtype=float), shape).copy()
    sd = np.broadcast_to(np.sqrt(np.asarray(variance, dtype=float)), shape).copy()
    sign = 1.0 if side == "positive" else -1.0
    out = np.empty(shape)
    todo = np.ones(shape, dtype=bool)
    while todo.any():
        m, s = mean[todo], sd[todo]
        w = _std_tail(np.atleast_1d(-sign * m / s), rng)
        draw = m + sign * s * w
        out[todo] = draw
        # rounding can land exactly on the boundary; redraw those
        inside = sign * out > 0
        todo = todo & ~inside
    return _out(out, size)


def gamma_sample(shape, rate, rng: RngStream, size=None):
    """Draw from the gamma law with density proportional to x^(shape-1) exp(-rate x).

    Shapes below one go through ``G(a) = G(a + 1) U^(1/a)`` in log space so
    that tiny shapes (such as 0.0198) do not underflow to zero; results are
    floored at the smallest normal double.
    """
    _check_positive("shape", shape)
    _check_positive("rate", rate)
    shape_arr = np.asarray(shape, dtype=float)
    if np.all(shape_arr >= 1.0):
        return _out(rng.generator.gamma(shape, 1.0 / np.asarray(rate), size), size)
    log_g = (
        np.log(rng.generator.gamma(shape_arr + 1.0, 1.0, size))
        + np.log(rng.uniform(size)) / shape_arr
        - np.log(rate)
    )
    return _out(np.maximum(np.exp(log_g), TINY), size)


def beta_sample(a, b, rng: RngStream, size=None):
    """Draw from Beta(a, b), strictly inside (0, 1)."""
    _check_positive("a", a)
    _check_positive("b", b)
    x = gamma_sample(a, 1.0, rng, size)
    y = gamma_sample(b, 1.0, rng, size)
    p = np.asarray(x) / (np.asarray(x) + np.asarray(y))
    eps = np.finfo(float).eps
    return _out(np.clip(p, TINY, 1.0 - eps / 2), size)


def gamma_gamma_sample(p: GammaGammaParams, rng: RngStream, size=None):
    """Draw from the gamma-gamma law by composition.

    The mixing rate is drawn from Gamma(alpha, rate=beta) and the variate from
    Gamma(n, rate=mixing rate); the marginal density is
    ``beta^a / Gamma(a) * Gamma(a+n) / Gamma(n) * x^(n-1) / (beta + x)^(a+n)``.
    """
    lam = gamma_sample(p.alpha, p.beta, rng, size)
    return gamma_sample(p.n, lam, rng, size)


def gamma_gamma_log_pdf(x, p: GammaGammaParams):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (
            p.alpha * math.log(p.beta)
            - special.gammaln(p.alpha)
            + special.gammaln(p.alpha + p.n)
            - special.gammaln(p.n)
            + (p.n - 1.0) * np.log(x)
            - (p.alpha + p.n) * np.log(p.beta + x)
        )
    return np.where(x > 0, val, -np.inf)


def double_exp_log_pdf(x, p_U, eta_U, eta_D):
    """Log density of the asymmetric double exponential jump law.

    Negative values carry weight ``1 - p_U`` and rate ``eta_D``; zero and
    positive values carry ``p_U`` and rate ``eta_U``.
    """
    if not 0.0 < p_U < 1.0:
        raise ParameterError(f"p_U must lie in (0, 1), got {p_U}")
    _check_positive("eta_U", eta_U)
    _check_positive("eta_D", eta_D)
    x = np.asarray(x, dtype=float)
    down = math.log1p(-p_U) + math.log(eta_D) + eta_D * x
    up = math.log(p_U) + math.log(eta_U) - eta_U * x
    out = np.where(x < 0, down, up)
    return out if out.ndim else float(out)


def double_exp_pdf(x, p_U, eta_U, eta_D):
    return np.exp(double_exp_log_pdf(x, p_U, eta_U, eta_D))


def normal_log_pdf(x, mean, variance):
    _check_positive("variance", variance)
    x = np.asarray(x, dtype=float)
    out = -0.5 * (LOG_2PI + np.log(variance)) - 0.5 * (x - mean) ** 2 / variance
    return out if np.ndim(out) else float(out)


def normal_log_cdf(x, mean, variance):
    """Log of the normal CDF, accurate far into the lower tail."""
    _check_positive("variance", variance)
    z = (np.asarray(x, dtype=float) - mean) / np.sqrt(variance)
    out = special.log_ndtr(z)
    return out if np.ndim(out) else float(out)
