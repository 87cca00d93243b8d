"""Compiled inner loops for the position sweep.

These mirror the vectorized numpy evaluations in :mod:`wdlsm.dyads` and are
checked against them in the test suite.
"""

import math

import numpy as np
from numba import njit

KIND_COUNT = 0
KIND_TOBIT = 1

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_CF_SWITCH = 5.0
_CF_TERMS = 80


@njit(cache=True)
def log_norm_sf(z):
    """log(1 - Phi(z)); continued fraction for the Mills ratio in the upper tail."""
    if z < _CF_SWITCH:
        return math.log(0.5 * math.erfc(z / _SQRT2))
    tail = z
    for k in range(_CF_TERMS, 0, -1):
        tail = z + k / tail
    return -0.5 * z * z - 0.5 * _LOG_2PI - math.log(tail)


@njit(cache=True)
def dyad_term(kind, y, logh, eta, gamma2):
    if kind == KIND_COUNT:
        return y * eta - math.exp(eta) + logh
    if y > 0.0:
        resid = y - eta
        return -0.5 * (_LOG_2PI + math.log(gamma2)) - 0.5 * resid * resid / gamma2
    return log_norm_sf(eta / math.sqrt(gamma2))


@njit(cache=True)
def local_loglik(X, t, a, xa, radii, beta_in, beta_out, gamma2, kind,
                 snd, rcv, y, w, logh, inc_ptr, inc_idx, n):
    """Weighted log-likelihood of the dyads touching actor ``a`` at time ``t``
    with the actor placed at ``xa``."""
    p = X.shape[2]
    total = 0.0
    row = t * n + a
    for q in range(inc_ptr[row], inc_ptr[row + 1]):
        k = inc_idx[q]
        i = snd[k]
        j = rcv[k]
        other = j if i == a else i
        sq = 0.0
        for c in range(p):
            diff = xa[c] - X[t, other, c]
            sq += diff * diff
        d = math.sqrt(sq)
        eta = beta_in * (1.0 - d / radii[j]) + beta_out * (1.0 - d / radii[i])
        total += w[k] * dyad_term(kind, y[k], logh[k], eta, gamma2)
    return total


@njit(cache=True)
def local_prior(X, t, a, xa, tau2, sigma2):
    T = X.shape[0]
    p = X.shape[2]
    total = 0.0
    if t == 0:
        sq = 0.0
        for c in range(p):
            sq += xa[c] * xa[c]
        total -= 0.5 * sq / tau2
    else:
        sq = 0.0
        for c in range(p):
            diff = xa[c] - X[t - 1, a, c]
            sq += diff * diff
        total -= 0.5 * sq / sigma2
    if t < T - 1:
        sq = 0.0
        for c in range(p):
            diff = X[t + 1, a, c] - xa[c]
            sq += diff * diff
        total -= 0.5 * sq / sigma2
    return total


@njit(cache=True)
def position_sweep(X, radii, beta_in, beta_out, gamma2, kind, tau2, sigma2,
                   snd, rcv, y, w, logh, inc_ptr, inc_idx,
                   steps, noise, log_u, use_likelihood, accepted):
    """One systematic scan over all (t, i) single-site random-walk updates.

    ``noise`` has shape (T, n, p) of standard normals and ``log_u`` shape
    (T, n) of log-uniforms. ``X`` is modified in place; ``accepted[t, i]`` is
    set to 1 for accepted moves.
    """
    T, n, p = X.shape
    prop = np.empty(p)
    for t in range(T):
        for a in range(n):
            for c in range(p):
                prop[c] = X[t, a, c] + steps[a] * noise[t, a, c]
            cur = X[t, a]
            log_ratio = local_prior(X, t, a, prop, tau2, sigma2) \
                - local_prior(X, t, a, cur, tau2, sigma2)
            if use_likelihood:
                log_ratio += local_loglik(X, t, a, prop, radii, beta_in, beta_out,
                                          gamma2, kind, snd, rcv, y, w, logh,
                                          inc_ptr, inc_idx, n)
                log_ratio -= local_loglik(X, t, a, cur, radii, beta_in, beta_out,
                                          gamma2, kind, snd, rcv, y, w, logh,
                                          inc_ptr, inc_idx, n)
            if log_u[t, a] < log_ratio:
                for c in range(p):
                    X[t, a, c] = prop[c]
                accepted[t, a] = 1
            else:
                accepted[t, a] = 0
