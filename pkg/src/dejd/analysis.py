"""Posterior summaries, convergence paths and jump detection from a chain."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ReturnsSeries
from .sampler import CHAIN_COLUMNS, Chain

__all__ = [
    "SUMMARY_ROWS",
    "PosteriorSummary",
    "JumpProbabilities",
    "JumpReport",
    "parameter_draws",
    "summarize",
    "ergodic_paths",
    "cusum_path",
    "sign_changes",
    "jump_probabilities",
    "detect_jumps",
]

# row name -> label used in rendered tables
SUMMARY_ROWS = {
    "mu": "mu",
    "mu_prime": "mu'",
    "sigma": "sigma",
    "lambda": "lambda",
    "diffusion_weight": "1/(1+lambda*delta)",
    "p_U": "p_U",
    "eta_D": "eta_D",
    "eta_U": "eta_U",
    "inv_eta_D": "1/eta_D",
    "inv_eta_U": "1/eta_U",
}

TABLE2_ROWS = ("mu", "sigma", "p_U", "eta_D", "eta_U", "lambda")
TABLE3_ROWS = ("mu_prime", "mu", "sigma", "lambda", "diffusion_weight", "p_U",
               "eta_D", "eta_U", "inv_eta_D", "inv_eta_U")


def parameter_draws(values: np.ndarray, name: str, delta: float) -> np.ndarray:
    """Per-draw values of a chain column or derived functional."""
    col = {c: values[:, i] for i, c in enumerate(CHAIN_COLUMNS)}
    if name in col:
        return col[name]
    h, L = col["h"], col["L"]
    derived = {
        "mu": lambda: col["mu_prime"] + 0.5 / h,
        "sigma": lambda: 1.0 / np.sqrt(h),
        "lambda": lambda: L / delta,
        "diffusion_weight": lambda: 1.0 / (1.0 + L),
        "inv_eta_D": lambda: 1.0 / col["eta_D"],
        "inv_eta_U": lambda: 1.0 / col["eta_U"],
        "p_D": lambda: 1.0 - col["p_U"],
    }
    try:
        return derived[name]()
    except KeyError:
        raise KeyError(f"unknown parameter {name!r}") from None


def _sd(v):
    return float(np.std(v, ddof=1)) if v.size > 1 else 0.0


@dataclass
class PosteriorSummary:
    """Posterior means and standard deviations, keyed by row name."""

    mean: dict
    sd: dict
    n_draws: int
    metadata: dict = field(default_factory=dict)

    def rows(self, names=None):
        names = SUMMARY_ROWS if names is None else names
        return [(name, self.mean[name], self.sd[name]) for name in names]

    def render(self, layout: str = "full") -> str:
        names = {"full": tuple(SUMMARY_ROWS), "table2": TABLE2_ROWS, "table3": TABLE3_ROWS}[layout]
        lines = [f"{'parameter':<20}{'E(.|x)':>14}{'D(.|x)':>14}"]
        for name, m, s in self.rows(names):
            lines.append(f"{SUMMARY_ROWS[name]:<20}{m:>14.4f}{s:>14.4f}")
        return "\n".join(lines)


def summarize(chain: Chain, delta: float | None = None) -> PosteriorSummary:
    """Posterior means and standard deviations over the retained draws.

    Nonlinear functionals such as ``1/(1+lambda*delta)`` are evaluated per
    draw and then averaged.
    """
    if len(chain) == 0:
        raise ValueError("cannot summarize an empty chain")
    delta = chain.delta if delta is None else delta
    mean, sd = {}, {}
    for name in SUMMARY_ROWS:
        v = parameter_draws(chain.values, name, delta)
        mean[name] = float(np.mean(v))
        sd[name] = _sd(v)
    meta = {"delta": delta, "seed": chain.config.seed, "burn_in": chain.config.burn_in,
            "draws": chain.config.draws, "thin": chain.config.thin}
    return PosteriorSummary(mean, sd, len(chain), meta)


def _draws(chain, parameter):
    if isinstance(chain, Chain):
        if len(chain) == 0:
            raise ValueError("empty chain")
        return parameter_draws(chain.values, parameter, chain.delta)
    return np.asarray(chain, dtype=float)


def ergodic_paths(chain, parameter: str):
    """Running mean and running standard deviation of one parameter.

    ``chain`` may also be a plain sequence of draws. The running standard
    deviation at the first draw is NaN.
    """
    v = _draws(chain, parameter)
    t = np.arange(1, v.size + 1)
    d = v - v[0]
    s1 = np.cumsum(d)
    s2 = np.cumsum(d * d)
    running_mean = v[0] + s1 / t
    with np.errstate(invalid="ignore", divide="ignore"):
        var = (s2 - s1 * s1 / t) / (t - 1)
    running_std = np.sqrt(np.maximum(var, 0.0))
    running_std[0] = np.nan
    return running_mean, running_std


def cusum_path(chain, parameter: str) -> np.ndarray:
    """Centered cumulative sums ``sum_{s<=t} (theta_s - mean(theta))``."""
    v = _draws(chain, parameter)
    if v.size < 2:
        raise ValueError("CUSUM needs at least 2 draws")
    return np.cumsum(v - v.mean())


def sign_changes(path: np.ndarray) -> int:
    """Number of sign crossings of a path; a smooth CUSUM has few of them."""
    s = np.sign(path[np.abs(path) > 1e-12 * max(1.0, float(np.max(np.abs(path))))])
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass
class JumpProbabilities:
    p_minus: np.ndarray
    p_plus: np.ndarray

    @property
    def p_zero(self):
        return 1.0 - self.p_minus - self.p_plus

    @property
    def p_jump(self):
        return self.p_minus + self.p_plus

    def __len__(self):
        return self.p_minus.size


def jump_probabilities(chain: Chain) -> JumpProbabilities:
    """Fraction of retained draws with ``xi_i = -1`` and ``xi_i = +1``, per day."""
    if chain.count_minus is None or chain.count_plus is None:
        raise ValueError("chain carries no latent accumulators")
    m = len(chain)
    if m == 0:
        raise ValueError("empty chain")
    return JumpProbabilities(chain.count_minus / m, chain.count_plus / m)


@dataclass
class JumpReport:
    """Detected jump days and the implied asymmetric thresholds.

    ``J_D``/``J_U`` are the detected returns of smallest magnitude on each
    side and ``k_D``/``k_U`` their distance from the sample mean in sample
    standard deviations; they are ``None`` when a side has no detections.
    """

    p_minus: np.ndarray
    p_plus: np.ndarray
    tau: float
    down_days: np.ndarray
    up_days: np.ndarray
    J_D: float | None
    J_U: float | None
    k_D: float | None
    k_U: float | None
    xbar: float
    sigma_n: float

    @property
    def detected_days(self):
        return np.union1d(self.down_days, self.up_days)


def _smallest_abs(values, idx):
    if idx.size == 0:
        return None
    # argmin returns the first minimum, i.e. the earliest day on ties
    return float(values[idx[np.argmin(np.abs(values[idx]))]])


def detect_jumps(probabilities: JumpProbabilities, x: ReturnsSeries, tau: float = 0.5) -> JumpReport:
    """Flag days whose posterior down/up jump probability exceeds ``tau``."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    values = x.values if isinstance(x, ReturnsSeries) else np.asarray(x, dtype=float)
    if len(probabilities) != values.size:
        raise ValueError("probabilities and series lengths differ")
    down = np.flatnonzero(probabilities.p_minus > tau)
    up = np.flatnonzero(probabilities.p_plus > tau)
    xbar = float(values.mean())
    sigma_n = float(values.std(ddof=1))
    J_D = _smallest_abs(values, down)
    J_U = _smallest_abs(values, up)
    return JumpReport(
        p_minus=probabilities.p_minus,
        p_plus=probabilities.p_plus,
        tau=tau,
        down_days=down,
        up_days=up,
        J_D=J_D,
        J_U=J_U,
        k_D=None if J_D is None else (xbar - J_D) / sigma_n,
        k_U=None if J_U is None else (J_U - xbar) / sigma_n,
        xbar=xbar,
        sigma_n=sigma_n,
    )
