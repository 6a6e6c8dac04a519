# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-observation latent kernels.

Same contract as ``_pykernels``. The regime weights are formed relative to
the diffusion term in linear space, which needs two ``exp`` and two ``erfc``
per observation; observations whose exponents leave a safe range go through
the log-space route instead.
"""
from libc.math cimport exp, log, log1p, sqrt, erfc, fmax, fmin, M_PI, M_SQRT1_2
from scipy.special cimport cython_special
from scipy.special.cython_special cimport ndtri_exp

import numpy as np

cdef double LOG_2PI = log(2.0 * M_PI)
cdef double TINY = 2.2250738585072014e-308
cdef double EXP_SAFE = 600.0
cdef double ERFC_SAFE = -20.0


cdef inline double log_ndtr(double z) noexcept nogil:
    # libc erfc is accurate to a few ulp down to z = -20; beyond, defer to scipy
    if z > 0.0:
        return log1p(-0.5 * erfc(z * M_SQRT1_2))
    if z > ERFC_SAFE:
        return log(0.5 * erfc(-z * M_SQRT1_2))
    return cython_special.log_ndtr(z)


cdef struct Consts:
    double mu_delta, var, sd, eta_D, eta_U
    double kd, ku      # log jump-branch constants relative to the diffusion term
    double cd, cu, cz  # absolute log constants for the slow path


cdef inline Consts _consts(double mu_prime, double h, double L, double p_U,
                           double eta_U, double eta_D, double delta) noexcept nogil:
    cdef Consts c
    c.mu_delta = mu_prime * delta
    c.var = delta / h
    c.sd = sqrt(c.var)
    c.eta_D = eta_D
    c.eta_U = eta_U
    c.cz = -0.5 * (LOG_2PI + log(c.var))
    c.cd = log(L) + log1p(-p_U) + log(eta_D) + 0.5 * c.var * eta_D * eta_D
    c.cu = log(L) + log(p_U) + log(eta_U) + 0.5 * c.var * eta_U * eta_U
    c.kd = c.cd - c.cz
    c.ku = c.cu - c.cz
    return c


cdef inline void _weights(double x, Consts* c, double* ed, double* ez, double* eu) noexcept nogil:
    """Unnormalized (down, none, up) regime weights with a common scale."""
    cdef double r = x - c.mu_delta
    cdef double q = 0.5 * r * r / c.var
    cdef double ad = -(r + c.var * c.eta_D) / c.sd
    cdef double au = (r - c.var * c.eta_U) / c.sd
    cdef double xd = c.kd + c.eta_D * r + q
    cdef double xu = c.ku - c.eta_U * r + q
    cdef double ld, lz, lu, top
    if xd < EXP_SAFE and xu < EXP_SAFE and xd > -EXP_SAFE and xu > -EXP_SAFE \
            and ad > ERFC_SAFE and au > ERFC_SAFE:
        ez[0] = 1.0
        ed[0] = exp(xd) * 0.5 * erfc(-ad * M_SQRT1_2)
        eu[0] = exp(xu) * 0.5 * erfc(-au * M_SQRT1_2)
        return
    lz = c.cz - q
    ld = c.cd + c.eta_D * r + log_ndtr(ad)
    lu = c.cu - c.eta_U * r + log_ndtr(au)
    top = fmax(fmax(ld, lz), lu)
    ed[0] = exp(ld - top)
    ez[0] = exp(lz - top)
    eu[0] = exp(lu - top)


def xi_probabilities(const double[::1] x, double mu_prime, double h, double L, double p_U,
                     double eta_U, double eta_D, double delta):
    cdef Py_ssize_t n = x.shape[0], i
    out_m = np.empty(n)
    out_z = np.empty(n)
    out_p = np.empty(n)
    cdef double[::1] pm = out_m, pz = out_z, pp = out_p
    cdef Consts c = _consts(mu_prime, h, L, p_U, eta_U, eta_D, delta)
    cdef double ed, ez, eu, total
    with nogil:
        for i in range(n):
            _weights(x[i], &c, &ed, &ez, &eu)
            total = ed + ez + eu
            pm[i] = ed / total
            pz[i] = ez / total
            pp[i] = eu / total
    return out_m, out_z, out_p


def update_latents(const double[::1] x, double mu_prime, double h, double L, double p_U,
                   double eta_U, double eta_D, double delta,
                   const double[::1] u_xi, const double[::1] u_j,
                   signed char[::1] xi_out, double[::1] J_out):
    cdef Py_ssize_t n = x.shape[0], i
    cdef Consts c = _consts(mu_prime, h, L, p_U, eta_U, eta_D, delta)
    cdef double ed, ez, eu, t, m, a, z
    with nogil:
        for i in range(n):
            _weights(x[i], &c, &ed, &ez, &eu)
            t = u_xi[i] * (ed + ez + eu)
            if t < ed:
                xi_out[i] = -1
                m = x[i] - c.mu_delta + c.var * eta_D
                a = -m / c.sd
                z = ndtri_exp(log(u_j[i]) + log_ndtr(a))
                J_out[i] = fmin(c.sd * (z - a), -TINY)
            elif t < ed + ez or eu <= 0.0:
                xi_out[i] = 0
                J_out[i] = 0.0
            else:
                xi_out[i] = 1
                m = x[i] - c.mu_delta - c.var * eta_U
                a = m / c.sd
                z = ndtri_exp(log(u_j[i]) + log_ndtr(a))
                J_out[i] = fmax(c.sd * (a - z), TINY)
