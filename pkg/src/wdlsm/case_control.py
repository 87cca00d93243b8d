"""Case-control approximation of the log-likelihood for sparse weighted networks.

For each sender ``i`` and time ``t`` the sum over zero dyads is replaced by a
Monte Carlo estimate from a uniform subsample of ``N`` zero dyads weighted by
``n0 / N``, where ``n0`` is the number of zero dyads in that row. Positive
dyads are always summed exactly. The cost of one evaluation is then
``sum_{i,t} (deg(i, t) + N)`` dyad terms instead of ``T n (n - 1)``.

For undirected networks the row of actor ``i`` holds only receivers ``j > i``
so that each unordered pair belongs to exactly one row.
"""

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .dyads import DyadSet
from .errors import UsageError
from .model import DyadKind, log_norm_sf


class DyadCounter:
    """Tally of dyad-term evaluations."""

    def __init__(self):
        self.count = 0

    def add(self, k):
        self.count += int(k)


@dataclass
class ExpFamilySpec:
    """Exponential-family dyad density ``h(y) exp(eta' T(y) + A(eta))``.

    ``natural_param(X, params, t, i, j)`` returns an ``(m, k)`` array of
    natural parameters for the dyads ``(t[m], i[m], j[m])``; ``suff_stat(y)``
    the matching ``(m, k)`` sufficient statistics; ``log_partition(eta)`` the
    ``(m,)`` values of ``A`` (already carrying its sign); and
    ``base_measure_log(y)`` the ``(m,)`` values of ``log h``.
    """

    natural_param: Callable
    suff_stat: Callable
    log_partition: Callable
    base_measure_log: Callable
    name: str = "custom"

    def dyad_terms(self, X, params, t, i, j, y, include_base_measure=True):
        eta = self.natural_param(X, params, t, i, j)
        out = np.sum(eta * self.suff_stat(y), axis=1) + self.log_partition(eta)
        if include_base_measure:
            out = out + self.base_measure_log(y)
        return out


def _eta_for(X, params, t, i, j):
    X = np.asarray(X, dtype=np.float64)
    diff = X[t, i] - X[t, j]
    d = np.sqrt(np.sum(diff * diff, axis=1))
    r = params.radii
    return params.beta_in * (1.0 - d / r[j]) + params.beta_out * (1.0 - d / r[i])


def poisson_family():
    """Poisson dyads with log link: ``eta = log(lambda)``, ``T(y) = y``, ``A = -exp(eta)``."""
    return ExpFamilySpec(
        natural_param=lambda X, params, t, i, j: _eta_for(X, params, t, i, j)[:, None],
        suff_stat=lambda y: np.asarray(y, dtype=np.float64)[:, None],
        log_partition=lambda eta: -np.exp(eta[:, 0]),
        base_measure_log=lambda y: -gammaln(np.asarray(y, dtype=np.float64) + 1.0),
        name="poisson",
    )


def _row_receivers(n, i, directed):
    return np.arange(i + 1, n) if not directed else np.delete(np.arange(n), i)


@dataclass
class SubsampleScheme:
    """Per-(t, i) subsamples of zero dyads.

    ``indices[t][i]`` holds sampled receivers ``j`` with ``y[t, i, j] == 0``;
    ``zero_counts[t, i]`` is the size of the full zero set. The full zero and
    positive sets are cached in ``zero_sets`` and ``positive_sets`` since they
    depend only on the data.
    """

    N_per_node: int
    zero_counts: np.ndarray
    indices: list
    refresh_every: int = 1
    directed: bool = True
    zero_sets: list = field(default=None, repr=False)
    positive_sets: list = field(default=None, repr=False)

    @property
    def T(self):
        return self.zero_counts.shape[0]

    @property
    def n(self):
        return self.zero_counts.shape[1]

    def sample_sizes(self):
        return np.array([[len(s) for s in row] for row in self.indices])

    def redraw(self, rng):
        """Fresh uniform subsample from the cached zero sets."""
        indices = _sample_rows(self.zero_sets, self.N_per_node, rng)
        return replace(self, indices=indices)

    def dyad_arrays(self, Y):
        """Flat ``(t, i, j, y, weight, positive)`` arrays of every dyad the
        approximation touches."""
        ts, ii, jj, ws, pos = [], [], [], [], []
        for t in range(self.T):
            for i in range(self.n):
                plus = self.positive_sets[t][i]
                sample = self.indices[t][i]
                n0 = self.zero_counts[t, i]
                if n0 > 0 and len(sample) == 0:
                    raise UsageError(f"empty subsample for non-empty zero set at t={t}, i={i}")
                ts.append(np.full(plus.size + sample.size, t))
                ii.append(np.full(plus.size + sample.size, i))
                jj.append(np.concatenate([plus, sample]))
                weight = n0 / sample.size if sample.size else 0.0
                ws.append(np.concatenate([np.ones(plus.size), np.full(sample.size, weight)]))
                pos.append(np.concatenate([np.ones(plus.size, bool), np.zeros(sample.size, bool)]))
        t = np.concatenate(ts).astype(np.int64)
        i = np.concatenate(ii).astype(np.int64)
        j = np.concatenate(jj).astype(np.int64)
        return t, i, j, Y.weights[t, i, j], np.concatenate(ws), np.concatenate(pos)


def _sample_rows(zero_sets, N, rng):
    out = []
    for row in zero_sets:
        out_t = []
        for zeros in row:
            if zeros.size <= N:
                out_t.append(zeros.copy())
            else:
                out_t.append(np.sort(rng.choice(zeros, size=N, replace=False)))
        out.append(out_t)
    return out


def draw_subsample(Y, N, rng, refresh_every=1):
    """Uniform subsample without replacement of at most ``N`` zero dyads per (t, i)."""
    if N < 1:
        raise UsageError("N must be at least 1")
    zero_sets, positive_sets = [], []
    zero_counts = np.zeros((Y.T, Y.n), dtype=np.int64)
    for t in range(Y.T):
        zrow, prow = [], []
        for i in range(Y.n):
            recv = _row_receivers(Y.n, i, Y.directed)
            vals = Y.weights[t, i, recv]
            zrow.append(recv[vals == 0])
            prow.append(recv[vals > 0])
            zero_counts[t, i] = zrow[-1].size
        zero_sets.append(zrow)
        positive_sets.append(prow)
    indices = _sample_rows(zero_sets, N, rng)
    return SubsampleScheme(N_per_node=int(N), zero_counts=zero_counts, indices=indices,
                           refresh_every=int(refresh_every), directed=Y.directed,
                           zero_sets=zero_sets, positive_sets=positive_sets)


def approx_loglik(Y, X, params, spec, sub, include_base_measure=True, counter=None):
    """Case-control estimate of the log-likelihood for an exponential-family model.

    With ``include_base_measure`` the ``log h(y)`` terms of the positive dyads
    are added, so an exhaustive subsample reproduces the exact log-likelihood.
    """
    t, i, j, y, w, _ = sub.dyad_arrays(Y)
    if counter is not None:
        counter.add(t.size)
    terms = spec.dyad_terms(X, params, t, i, j, y, include_base_measure)
    return float(np.dot(w, terms))


def _require(Y, kind):
    if Y.kind is not kind:
        raise UsageError(f"expected a {kind.value} network, got {Y.kind.value}")


def approx_loglik_count(Y, X, params, sub, counter=None):
    """Poisson case-control log-likelihood, without the ``-log(y!)`` constant."""
    _require(Y, DyadKind.COUNT)
    t, i, j, y, w, _ = sub.dyad_arrays(Y)
    if counter is not None:
        counter.add(t.size)
    log_lam = _eta_for(X, params, t, i, j)
    return float(np.dot(w, y * log_lam - np.exp(log_lam)))


def approx_loglik_tobit(Y, X, params, sub, counter=None):
    """Tobit case-control log-likelihood, without the ``-log(2 pi)/2`` per positive dyad."""
    _require(Y, DyadKind.NONNEG_REAL)
    t, i, j, y, w, positive = sub.dyad_arrays(Y)
    if counter is not None:
        counter.add(t.size)
    mu = _eta_for(X, params, t, i, j)
    g2 = params.gamma2
    terms = np.where(positive,
                     -0.5 * np.log(g2) - 0.5 * (y - mu) ** 2 / g2,
                     log_norm_sf(mu / np.sqrt(g2)))
    return float(np.dot(w, terms))


@dataclass
class ZeroInflation:
    """Point-mass weight ``alpha`` and component indicators for subsampled zeros.

    ``z[t][i]`` aligns with ``SubsampleScheme.indices[t][i]``; 1 marks the
    point mass at zero, 2 the exponential-family component.
    """

    alpha: float
    z: list

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise UsageError("alpha must lie in (0, 1)")


def zip_complete_loglik(Y, X, params, spec, sub, zi, include_base_measure=True):
    """Case-control complete-data log-likelihood of the zero-inflated model."""
    if len(zi.z) != sub.T or any(len(row) != sub.n for row in zi.z):
        raise UsageError("indicator layout does not match the subsample")
    zs = []
    for t in range(sub.T):
        for i in range(sub.n):
            z = np.asarray(zi.z[t][i])
            if z.size != sub.indices[t][i].size:
                raise UsageError(f"missing indicators at t={t}, i={i}")
            zs.append(np.concatenate([np.full(sub.positive_sets[t][i].size, 2), z]))
    z = np.concatenate(zs).astype(np.int64)
    t, i, j, y, w, positive = sub.dyad_arrays(Y)
    if np.any(~np.isin(z[~positive], (1, 2))):
        raise UsageError("indicators must be 1 or 2")
    terms = spec.dyad_terms(X, params, t, i, j, y, include_base_measure)
    log_a, log_1ma = np.log(zi.alpha), np.log1p(-zi.alpha)
    contrib = np.where(z == 1, log_a, log_1ma + terms)
    return float(np.dot(w, contrib))


def sample_zip_indicators(Y, X, params, spec, sub, alpha, rng):
    """Draw indicators for subsampled zeros from their conditional posterior."""
    if not 0.0 < alpha < 1.0:
        raise UsageError("alpha must lie in (0, 1)")
    z = []
    for t in range(sub.T):
        row = []
        for i in range(sub.n):
            j = sub.indices[t][i]
            if j.size == 0:
                row.append(np.zeros(0, dtype=np.int64))
                continue
            tt = np.full(j.size, t)
            ii = np.full(j.size, i)
            log_f0 = spec.dyad_terms(X, params, tt, ii, j, np.zeros(j.size), True)
            prob = alpha / (alpha + (1.0 - alpha) * np.exp(log_f0))
            row.append(np.where(rng.random(j.size) < prob, 1, 2))
        z.append(row)
    return ZeroInflation(alpha=alpha, z=z)


def case_control_dyad_set(Y, sub):
    """The weighted dyad list used by the sampler in case-control mode."""
    t, i, j, y, w, _ = sub.dyad_arrays(Y)
    return DyadSet.build(Y.T, Y.n, Y.kind, t, i, j, y, w)
