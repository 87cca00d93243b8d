"""Weighted dyad lists.

The sampler evaluates the likelihood as ``sum_k w_k * loglik(y_k | eta_k)``
over a flat list of dyads. With every observed dyad at weight one this is the
exact likelihood; with positive dyads at weight one plus a subsample of zero
dyads at weight ``n0 / N`` it is the case-control approximation.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .model import DyadKind, dyad_mask, log_norm_sf, LOG_2PI


@dataclass
class DyadSet:
    """A flat list of dyads ``(t, sender, receiver)`` with values and weights.

    ``inc_ptr``/``inc_idx`` form a CSR index: the dyads touching actor ``a`` at
    time ``t`` are ``inc_idx[inc_ptr[t*n + a]:inc_ptr[t*n + a + 1]]``.
    """

    T: int
    n: int
    kind: DyadKind
    t: np.ndarray
    snd: np.ndarray
    rcv: np.ndarray
    y: np.ndarray
    w: np.ndarray
    logh: np.ndarray
    inc_ptr: np.ndarray
    inc_idx: np.ndarray

    def __len__(self):
        return self.t.size

    @classmethod
    def build(cls, T, n, kind, t, snd, rcv, y, w):
        t = np.ascontiguousarray(t, dtype=np.int64)
        snd = np.ascontiguousarray(snd, dtype=np.int64)
        rcv = np.ascontiguousarray(rcv, dtype=np.int64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        w = np.ascontiguousarray(w, dtype=np.float64)
        if kind is DyadKind.COUNT:
            logh = -gammaln(y + 1.0)
        else:
            logh = np.zeros_like(y)
        m = t.size
        ends = np.concatenate([t * n + snd, t * n + rcv])
        owners = np.concatenate([np.arange(m), np.arange(m)])
        order = np.argsort(ends, kind="stable")
        counts = np.bincount(ends, minlength=T * n)
        inc_ptr = np.zeros(T * n + 1, dtype=np.int64)
        np.cumsum(counts, out=inc_ptr[1:])
        inc_idx = np.ascontiguousarray(owners[order], dtype=np.int64)
        return cls(T, n, kind, t, snd, rcv, y, w, logh, inc_ptr, inc_idx)

    @classmethod
    def full(cls, Y):
        """Every observed dyad at weight one."""
        mask = dyad_mask(Y.n, Y.directed)
        ii, jj = np.nonzero(mask)
        T = Y.T
        t = np.repeat(np.arange(T), ii.size)
        snd = np.tile(ii, T)
        rcv = np.tile(jj, T)
        y = Y.weights[t, snd, rcv]
        return cls.build(T, Y.n, Y.kind, t, snd, rcv, y, np.ones_like(y))

    @property
    def kind_code(self):
        return _kernels.KIND_COUNT if self.kind is DyadKind.COUNT else _kernels.KIND_TOBIT

    def distances(self, X):
        diff = X[self.t, self.snd] - X[self.t, self.rcv]
        return np.sqrt(np.sum(diff * diff, axis=1))

    def eta(self, d, params):
        r = params.radii
        return params.beta_in * (1.0 - d / r[self.rcv]) \
            + params.beta_out * (1.0 - d / r[self.snd])

    def terms(self, eta, gamma2=None):
        """Unweighted per-dyad log densities, base measure included."""
        if self.kind is DyadKind.COUNT:
            return self.y * eta - np.exp(eta) + self.logh
        positive = self.y > 0
        out = np.empty_like(eta)
        resid = self.y[positive] - eta[positive]
        out[positive] = -0.5 * (LOG_2PI + np.log(gamma2)) - 0.5 * resid ** 2 / gamma2
        out[~positive] = log_norm_sf(eta[~positive] / np.sqrt(gamma2))
        return out

    def loglik(self, X, params, d=None):
        """Weighted log-likelihood; pass cached distances ``d`` to skip recomputing them."""
        if d is None:
            d = self.distances(X)
        return float(np.dot(self.w, self.terms(self.eta(d, params), params.gamma2)))

    def incident(self, t, a):
        row = t * self.n + a
        return self.inc_idx[self.inc_ptr[row]:self.inc_ptr[row + 1]]
