"""Numpy implementation of the per-observation latent kernels.

Used when the compiled extension is unavailable; it computes the same
deterministic transform of the supplied uniforms as ``_ckernels.pyx``.
"""
import math

import numpy as np
from scipy import special

LOG_2PI = math.log(2.0 * math.pi)
TINY = np.finfo(float).tiny


def _log_terms(x, mu_prime, h, L, p_U, eta_U, eta_D, delta):
    var = delta / h
    sd = math.sqrt(var)
    r = x - mu_prime * delta
    log_l = math.log(L)
    lz = -0.5 * (LOG_2PI + math.log(var)) - 0.5 * r * r / var
    ld = (log_l + math.log1p(-p_U) + math.log(eta_D) + 0.5 * var * eta_D * eta_D
          + eta_D * r + special.log_ndtr(-(r + var * eta_D) / sd))
    lu = (log_l + math.log(p_U) + math.log(eta_U) + 0.5 * var * eta_U * eta_U
          - eta_U * r + special.log_ndtr((r - var * eta_U) / sd))
    return ld, lz, lu


def xi_probabilities(x, mu_prime, h, L, p_U, eta_U, eta_D, delta):
    """Posterior regime probabilities ``(p_minus, p_zero, p_plus)`` per observation."""
    x = np.asarray(x, dtype=float)
    ld, lz, lu = _log_terms(x, mu_prime, h, L, p_U, eta_U, eta_D, delta)
    top = np.maximum(np.maximum(ld, lz), lu)
    ed, ez, eu = np.exp(ld - top), np.exp(lz - top), np.exp(lu - top)
    total = ed + ez + eu
    return ed / total, ez / total, eu / total


def update_latents(x, mu_prime, h, L, p_U, eta_U, eta_D, delta, u_xi, u_j, xi_out, J_out):
    """Draw ``(xi_i, J_i)`` for every observation from their exact conditionals.

    ``u_xi`` holds uniforms on [0, 1) for the regime draw and ``u_j``
    uniforms on (0, 1] for the inverse-CDF truncated normal jump draw. Results
    are written into ``xi_out`` (int8) and ``J_out`` (float64).
    """
    x = np.asarray(x, dtype=float)
    ld, lz, lu = _log_terms(x, mu_prime, h, L, p_U, eta_U, eta_D, delta)
    top = np.maximum(np.maximum(ld, lz), lu)
    ed, ez, eu = np.exp(ld - top), np.exp(lz - top), np.exp(lu - top)
    t = u_xi * (ed + ez + eu)
    xi = np.where(t < ed, -1, np.where((t < ed + ez) | (eu <= 0.0), 0, 1)).astype(np.int8)
    xi_out[:] = xi
    J_out[:] = 0.0

    var = delta / h
    sd = math.sqrt(var)
    down = np.flatnonzero(xi == -1)
    if down.size:
        m = x[down] - mu_prime * delta + var * eta_D
        a = -m / sd
        z = special.ndtri_exp(np.log(u_j[down]) + special.log_ndtr(a))
        J_out[down] = np.minimum(sd * (z - a), -TINY)
    up = np.flatnonzero(xi == 1)
    if up.size:
        m = x[up] - mu_prime * delta - var * eta_U
        b = m / sd
        w = special.ndtri_exp(np.log(u_j[up]) + special.log_ndtr(b))
        J_out[up] = np.maximum(sd * (b - w), TINY)
