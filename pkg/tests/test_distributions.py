import math

import numpy as np
import pytest
from scipy import integrate, stats

from dejd.distributions import (
    GammaGammaParams,
    ParameterError,
    RngStream,
    beta_sample,
    double_exp_pdf,
    gamma_gamma_log_pdf,
    gamma_gamma_sample,
    gamma_sample,
    normal_log_cdf,
    normal_log_pdf,
    normal_sample,
    truncated_normal_sample,
)

from conftest import mc_se

N = 100_000


# --- RngStream -------------------------------------------------------------------

def test_same_seed_same_sequence():
    a = RngStream(42).generator.random(10)
    b = RngStream(42).generator.random(10)
    assert np.array_equal(a, b)


def test_substreams_deterministic_and_distinct():
    root = RngStream(42)
    a1 = root.substream("a").generator.random(1000)
    a2 = RngStream(42).substream("a").generator.random(1000)
    b = root.substream("b").generator.random(1000)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    assert abs(np.corrcoef(a1, b)[0, 1]) < 0.15


def test_uniform_excludes_zero():
    u = RngStream(1).uniform(10_000)
    assert np.all((u > 0) & (u <= 1))


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ParameterError):
        RngStream(seed)


# --- normal ------------------------------------------------------------------------

def test_normal_mean(rng):
    d = normal_sample(0.0, 1.0, rng, N)
    assert abs(d.mean()) < 3 / math.sqrt(N)


def test_normal_degenerate_variance(rng):
    d = normal_sample(1.5, 1e-30, rng, 100)
    assert np.all(np.abs(d - 1.5) < 1e-10)


def test_normal_variance(rng):
    d = normal_sample(5.0, 4.0, rng, N)
    assert abs(d.var() - 4.0) < 0.05 * 4.0


def test_normal_rejects_bad_variance(rng):
    with pytest.raises(ParameterError):
        normal_sample(0.0, 0.0, rng)


# --- truncated normal ------------------------------------------------------------------

def test_truncated_negative_support(rng):
    d = truncated_normal_sample(0.0, 1.0, "negative", rng, 10_000)
    assert np.all(d < 0)


def test_truncated_half_normal_mean(rng):
    d = truncated_normal_sample(0.0, 1.0, "positive", rng, N)
    assert abs(d.mean() - math.sqrt(2 / math.pi)) < 3 * mc_se(d)


def _truncated_mean_below_zero(m, s):
    # E[X | X < 0] for X ~ N(m, s^2), by quadrature on t = -x with a
    # rescaled integrand so the tiny normalizer does not underflow
    def w(t):
        return math.exp(-0.5 * ((t + m) / s) ** 2 + 0.5 * (m / s) ** 2)

    num = integrate.quad(lambda t: -t * w(t), 0, np.inf, epsabs=0, epsrel=1e-12)[0]
    den = integrate.quad(w, 0, np.inf, epsabs=0, epsrel=1e-12)[0]
    return num / den


def test_truncated_far_tail(rng):
    d = truncated_normal_sample(10.0, 1.0, "negative", rng, 10_000)
    assert np.all(np.isfinite(d)) and np.all(d < 0)
    oracle = _truncated_mean_below_zero(10.0, 1.0)
    assert abs(d.mean() - oracle) < 0.1 * abs(oracle)


@pytest.mark.parametrize("m", [-3.0, -0.5, 1.0, 2.4, 2.6, 6.0, 40.0])
def test_truncated_mean_across_regions(rng, m):
    d = truncated_normal_sample(m, 1.0, "negative", rng, 50_000)
    assert np.all(d < 0)
    assert abs(d.mean() - _truncated_mean_below_zero(m, 1.0)) < 4 * mc_se(d)


def test_truncated_matches_scipy_truncnorm(rng):
    d = truncated_normal_sample(0.3, 0.04, "positive", rng, 50_000)
    ref = stats.truncnorm(a=-0.3 / 0.2, b=np.inf, loc=0.3, scale=0.2)
    assert stats.kstest(d, ref.cdf).pvalue > 0.001


def test_truncated_vector_parameters(rng):
    means = np.array([-1.0, 0.0, 5.0, 30.0])
    d = truncated_normal_sample(means, 1.0, "negative", rng, 4)
    assert d.shape == (4,) and np.all(d < 0)


def test_truncated_bad_side(rng):
    with pytest.raises(ParameterError):
        truncated_normal_sample(0.0, 1.0, "left", rng)


# --- gamma ---------------------------------------------------------------------------

def test_gamma_mean(rng):
    d = gamma_sample(2.0, 3.0, rng, N)
    assert abs(d.mean() - 2 / 3) < 3 * mc_se(d)


def test_gamma_one_is_exponential(rng):
    d = gamma_sample(1.0, 1.0, rng, N)
    # SE of the median of Exp(1): 1/(2 f(m) sqrt(N)) with f(ln 2) = 1/2
    assert abs(np.median(d) - math.log(2)) < 3 / math.sqrt(N)


def test_gamma_fractional_shape():
    # a 5% band is only about 2.2 standard errors at this shape, so the
    # distributional check below carries the real weight
    shape = 0.0198
    d = gamma_sample(shape, 0.5, RngStream(1), N)
    assert np.all(d > 0)
    assert abs(d.mean() - shape / 0.5) < 0.05 * shape / 0.5


@pytest.mark.parametrize("shape", [0.0198, 0.3, 0.999])
def test_gamma_fractional_shape_distribution(rng, shape):
    d = gamma_sample(shape, 2.0, rng, 50_000)
    assert stats.kstest(d, stats.gamma(shape, scale=0.5).cdf).pvalue > 0.001


@pytest.mark.parametrize("shape,rate", [(0.0, 1.0), (1.0, -1.0), (math.nan, 1.0)])
def test_gamma_bad_params(rng, shape, rate):
    with pytest.raises(ParameterError):
        gamma_sample(shape, rate, rng)


# --- beta ----------------------------------------------------------------------------

def test_beta_uniform(rng):
    d = beta_sample(1.0, 1.0, rng, N)
    assert stats.kstest(d, "uniform").statistic < 0.01


def test_beta_mean(rng):
    d = beta_sample(4.0, 3.0, rng, N)
    assert abs(d.mean() - 4 / 7) < 3 * mc_se(d)


def test_beta_open_interval(rng):
    d = beta_sample(0.5, 0.5, rng, 10_000)
    assert np.all((d > 0) & (d < 1))


def test_beta_tiny_shapes_stay_inside(rng):
    d = beta_sample(0.01, 0.01, rng, 10_000)
    assert np.all((d > 0) & (d < 1))


# --- gamma-gamma -----------------------------------------------------------------------

GG = GammaGammaParams(alpha=3.0, beta=1.0, n=2.0)


def test_gamma_gamma_mean(rng):
    d = gamma_gamma_sample(GG, rng, N)
    assert abs(d.mean() - GG.n * GG.beta / (GG.alpha - 1)) < 3 * mc_se(d)


def test_gamma_gamma_positive(rng):
    d = gamma_gamma_sample(GammaGammaParams(0.5, 2.0, 0.02), rng, 10_000)
    assert np.all(d > 0)


def test_gamma_gamma_density_normalized():
    total = integrate.quad(lambda x: math.exp(gamma_gamma_log_pdf(x, GG)), 0, np.inf)[0]
    assert abs(total - 1.0) < 1e-8


def test_gamma_gamma_histogram_total_variation(rng):
    d = gamma_gamma_sample(GG, rng, N)
    edges = np.linspace(0.0, 20.0, 41)

    def pdf(x):
        return math.exp(gamma_gamma_log_pdf(x, GG))

    norm = integrate.quad(pdf, 0, np.inf)[0]
    probs = np.array([integrate.quad(pdf, a, b)[0] for a, b in zip(edges[:-1], edges[1:])]) / norm
    probs = np.append(probs, 1.0 - probs.sum())
    counts = np.histogram(d, bins=edges)[0]
    emp = np.append(counts, np.sum(d >= 20.0)) / d.size
    tv = 0.5 * np.abs(emp - probs).sum()
    assert tv <= 0.02


def test_gamma_gamma_params_validated():
    with pytest.raises(ParameterError):
        GammaGammaParams(alpha=-1.0, beta=1.0, n=1.0)


# --- double exponential ----------------------------------------------------------------

def test_double_exp_at_zero_takes_up_branch():
    assert double_exp_pdf(0.0, 0.5, 30.0, 5.0) == pytest.approx(15.0, rel=1e-15)


def test_double_exp_symmetry():
    x = np.linspace(0.01, 1.0, 25)
    np.testing.assert_allclose(double_exp_pdf(x, 0.5, 7.0, 7.0), double_exp_pdf(-x, 0.5, 7.0, 7.0), rtol=1e-14)


@pytest.mark.parametrize("p_U", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("eta_U,eta_D", [(30.0, 5.0), (0.5, 2.0), (100.0, 100.0)])
def test_double_exp_integrates_to_one(p_U, eta_U, eta_D):
    f = lambda x: double_exp_pdf(x, p_U, eta_U, eta_D)  # noqa: E731
    total = integrate.quad(f, -np.inf, 0, epsabs=1e-13)[0] + integrate.quad(f, 0, np.inf, epsabs=1e-13)[0]
    assert abs(total - 1.0) < 1e-8


def test_double_exp_bad_probability():
    with pytest.raises(ParameterError):
        double_exp_pdf(0.1, 1.0, 1.0, 1.0)


# --- normal log density / log CDF ---------------------------------------------------------

def test_log_cdf_at_mean():
    assert normal_log_cdf(0.0, 0.0, 1.0) == pytest.approx(math.log(0.5), abs=1e-15)


def test_log_cdf_far_tail_matches_mills_asymptotic():
    z = 40.0
    oracle = -0.5 * z * z - 0.5 * math.log(2 * math.pi) - math.log(z) + math.log(1 - 1 / z**2 + 3 / z**4)
    got = normal_log_cdf(-40.0, 0.0, 1.0)
    assert math.isfinite(got)
    assert abs(got - oracle) < 1e-6 * abs(oracle)


def test_log_cdf_matches_mpmath_grid():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for z in (-200.0, -37.5, -8.0, -1.0, 0.3, 5.0):
        oracle = float(mpmath.log(mpmath.ncdf(z)))
        assert normal_log_cdf(z, 0.0, 1.0) == pytest.approx(oracle, rel=1e-12, abs=1e-300)


def test_log_pdf_at_mode():
    assert normal_log_pdf(2.0, 2.0, 0.3) == pytest.approx(-0.5 * math.log(2 * math.pi * 0.3), rel=1e-15)


def test_log_pdf_rejects_bad_variance():
    with pytest.raises(ParameterError):
        normal_log_pdf(0.0, 0.0, -1.0)
