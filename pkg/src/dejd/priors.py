"""Prior structure over the DEJD parameters and the four named presets.

Hyperparameter names follow the sampling parametrization:

============  =====================================================
``mu0``       prior mean of ``mu'`` (``mu' | h ~ N(mu0, 1/(h A_mu))``)
``A_mu``      precision scale of ``mu' | h``
``nu_h``      shape of the gamma prior on ``h``
``A_h``       rate of the gamma prior on ``h``
``a_U``       first Beta parameter for ``p_U``
``b_U``       second Beta parameter for ``p_U``
``nu_etaU``   shape of the gamma prior on ``eta_U``
``A_etaU``    rate of the gamma prior on ``eta_U``
``nu_etaD``   shape of the gamma prior on ``eta_D``
``A_etaD``    rate of the gamma prior on ``eta_D``
``nu_L``      chi-square degrees of freedom of the prior on ``L``
============  =====================================================
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from scipy import special

from .distributions import ParameterError, RngStream, beta_sample, gamma_sample
from .model import DEFAULT_DELTA, ModelParams

__all__ = ["PriorSpec", "PRESET_NAMES", "preset", "prior_sample", "prior_log_pdf", "chi2_log_pdf"]

PRESET_NAMES = ("I", "II", "III", "IV")

# nu_L is given in units of delta (10 * delta for every preset)
_PRESET_TABLE = {
    #        mu0  A_mu  nu_h  A_h      a_U  b_U  nu_etaU A_etaU   nu_etaD A_etaD
    "I": (0.1, 1.0, 5.0, 1.0, 1.0, 1.0, 2.56, 0.00576, 2.56, 0.00576),
    "II": (0.0, 1.0, 5.0, 1.0, 1.0, 1.0, 0.5, 1.0, 0.5, 1.0),
    "III": (0.0, 1.0, 5.0, 1.0, 1.0, 1.0, 1.86, 0.43, 1.86, 0.43),
    "IV": (0.0, 1.0, 2.56, 0.00576, 1.0, 1.0, 2.56, 0.00576, 2.56, 0.00576),
}
_NU_L_IN_DELTAS = 10.0


@dataclass(frozen=True)
class PriorSpec:
    mu0: float
    A_mu: float
    nu_h: float
    A_h: float
    a_U: float
    b_U: float
    nu_etaU: float
    A_etaU: float
    nu_etaD: float
    A_etaD: float
    nu_L: float

    def __post_init__(self):
        if not math.isfinite(self.mu0):
            raise ParameterError(f"mu0 must be finite, got {self.mu0}")
        for f in fields(self):
            if f.name == "mu0":
                continue
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ParameterError(f"prior hyperparameter {f.name} must be positive, got {v!r}")

    def warnings(self) -> list[str]:
        """Non-fatal remarks about unusual hyperparameters."""
        out = []
        if self.nu_L < 0.1:
            out.append(
                f"nu_L={self.nu_L:.4g} puts almost all prior mass on L near 0 "
                "(chi-square with fractional degrees of freedom)"
            )
        return out

    def with_overrides(self, **overrides) -> "PriorSpec":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise KeyError(f"unknown prior fields: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self):
        return asdict(self)


def preset(name: str, delta: float = DEFAULT_DELTA) -> PriorSpec:
    """One of the named prior structures ``I``, ``II``, ``III`` or ``IV``.

    >>> preset("III").A_etaD
    0.43
    """
    try:
        row = _PRESET_TABLE[name]
    except KeyError:
        raise KeyError(f"unknown prior preset {name!r}; choose from {PRESET_NAMES}") from None
    return PriorSpec(*row, nu_L=_NU_L_IN_DELTAS * delta)


def prior_sample(spec: PriorSpec, rng: RngStream) -> ModelParams:
    h = gamma_sample(spec.nu_h, spec.A_h, rng)
    mu_prime = rng.generator.normal(spec.mu0, 1.0 / math.sqrt(h * spec.A_mu))
    L = gamma_sample(0.5 * spec.nu_L, 0.5, rng)
    p_U = beta_sample(spec.a_U, spec.b_U, rng)
    eta_U = gamma_sample(spec.nu_etaU, spec.A_etaU, rng)
    eta_D = gamma_sample(spec.nu_etaD, spec.A_etaD, rng)
    return ModelParams(mu_prime, h, L, p_U, eta_U, eta_D)


def prior_sample_arrays(spec: PriorSpec, rng: RngStream, size: int) -> dict:
    """Vectorized prior draws, keyed by parameter name."""
    h = gamma_sample(spec.nu_h, spec.A_h, rng, size)
    return {
        "h": h,
        "mu_prime": rng.generator.normal(spec.mu0, 1.0 / np.sqrt(h * spec.A_mu)),
        "L": gamma_sample(0.5 * spec.nu_L, 0.5, rng, size),
        "p_U": beta_sample(spec.a_U, spec.b_U, rng, size),
        "eta_U": gamma_sample(spec.nu_etaU, spec.A_etaU, rng, size),
        "eta_D": gamma_sample(spec.nu_etaD, spec.A_etaD, rng, size),
    }


def _gamma_log_pdf(x, shape, rate):
    if not x > 0:
        return -math.inf
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * math.log(x) - rate * x


def chi2_log_pdf(x, nu):
    """Chi-square log density; ``nu`` may be fractional."""
    return _gamma_log_pdf(x, 0.5 * nu, 0.5)


def _beta_log_pdf(p, a, b):
    if not 0.0 < p < 1.0:
        return -math.inf
    return (a - 1.0) * math.log(p) + (b - 1.0) * math.log1p(-p) - special.betaln(a, b)


def prior_log_pdf(spec: PriorSpec, params: ModelParams) -> float:
    """Joint log prior density of the six parameters (normalized).

    Returns ``-inf`` for parameters outside the support.
    """
    h = params.h
    if not h > 0:
        return -math.inf
    prec = h * spec.A_mu
    log_mu = 0.5 * (math.log(prec) - math.log(2.0 * math.pi)) - 0.5 * prec * (params.mu_prime - spec.mu0) ** 2
    return (
        log_mu
        + _gamma_log_pdf(h, spec.nu_h, spec.A_h)
        + chi2_log_pdf(params.L, spec.nu_L)
        + _beta_log_pdf(params.p_U, spec.a_U, spec.b_U)
        + _gamma_log_pdf(params.eta_U, spec.nu_etaU, spec.A_etaU)
        + _gamma_log_pdf(params.eta_D, spec.nu_etaD, spec.A_etaD)
    )
