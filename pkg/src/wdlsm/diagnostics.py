"""Goodness of fit, latent geometry checks, Mantel tests and chain diagnostics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, UsageError
from .model import DyadKind, dyad_geometry, dyad_mask, pairwise_distances

__all__ = [
    "FitReport",
    "MantelResult",
    "DistanceRatios",
    "ChainDiagnostics",
    "pseudo_r2_count",
    "pseudo_r2_count_from_fitted",
    "pseudo_r2_tobit",
    "pseudo_r2_tobit_from_fitted",
    "distance_ratio_distribution",
    "category_distance_matrix",
    "mantel_statistic",
    "mantel_test",
    "autocorrelation",
    "effective_sample_size",
    "chain_diagnostics",
]


@dataclass
class FitReport:
    pseudo_r2: float
    y_bar: float
    fitted: np.ndarray
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"pseudo_r2": self.pseudo_r2, "y_bar": self.y_bar, "notes": list(self.notes)}


@dataclass
class MantelResult:
    statistic: float
    p_value: float
    n_boot: int
    method: str = "permutation"

    def to_dict(self):
        return {"statistic": self.statistic, "p_value": self.p_value,
                "n_boot": self.n_boot, "method": self.method}


def _observed(Y, array):
    mask = dyad_mask(Y.n, Y.directed)
    return array[:, mask]


def pseudo_r2_count_from_fitted(y, lam):
    """Deviance pseudo-R2 of fitted Poisson means ``lam`` for counts ``y``.

    Both arguments are flat arrays over the observed dyads. ``y_bar`` is the
    grand mean of ``y`` and ``0 * log(0)`` is taken as 0.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    lam = np.asarray(lam, dtype=np.float64).ravel()
    y_bar = y.mean()
    if not y_bar > 0 or np.all(y == y[0]):
        raise DegenerateInputError("pseudo-R2 undefined: all dyads are equal")
    pos = y > 0
    num = np.sum(y[pos] * np.log(lam[pos] / y_bar)) - np.sum(lam - y_bar)
    den = np.sum(y[pos] * np.log(y[pos] / y_bar))
    notes = ["y_bar is the grand mean of the observed dyads",
             f"0*log(0) taken as 0 for {int((~pos).sum())} zero dyads"]
    return float(num / den), float(y_bar), notes


def pseudo_r2_count(Y, X, params):
    if Y.kind is not DyadKind.COUNT:
        raise UsageError("pseudo_r2_count needs a count network")
    lam = np.exp(dyad_geometry(np.asarray(X), params).eta)
    r2, y_bar, notes = pseudo_r2_count_from_fitted(_observed(Y, Y.weights), _observed(Y, lam))
    return FitReport(pseudo_r2=r2, y_bar=y_bar, fitted=lam, notes=notes)


def pseudo_r2_tobit_from_fitted(y_star_hat, gamma2):
    """Latent-variance pseudo-R2 from fitted latent means over the observed dyads."""
    f = np.asarray(y_star_hat, dtype=np.float64).ravel()
    explained = np.sum((f - f.mean()) ** 2)
    return float(explained / (explained + f.size * gamma2))


def pseudo_r2_tobit(Y, X, params):
    if Y.kind is not DyadKind.NONNEG_REAL:
        raise UsageError("pseudo_r2_tobit needs a non-negative real network")
    mu = dyad_geometry(np.asarray(X), params).eta
    obs = _observed(Y, mu)
    r2 = pseudo_r2_tobit_from_fitted(obs, params.gamma2)
    return FitReport(pseudo_r2=r2, y_bar=float(_observed(Y, Y.weights).mean()), fitted=mu,
                     notes=["denominator uses the number of observed dyads"])


@dataclass
class DistanceRatios:
    ratios: np.ndarray
    n_excluded: int

    def quantiles(self, qs=(0.05, 0.25, 0.5, 0.75, 0.95)):
        return {f"q{int(round(q * 100)):02d}": float(np.quantile(self.ratios, q)) for q in qs}

    @property
    def median(self):
        return float(np.median(self.ratios))

    @property
    def iqr(self):
        lo, hi = np.quantile(self.ratios, [0.25, 0.75])
        return float(hi - lo)


def distance_ratio_distribution(X_est, X_true):
    """Sorted ratios of estimated to true pairwise distances, all pairs at all times."""
    X_est = np.asarray(X_est, dtype=np.float64)
    X_true = np.asarray(X_true, dtype=np.float64)
    if X_est.shape != X_true.shape:
        raise UsageError("trajectory shapes differ")
    iu = np.triu_indices(X_est.shape[1], k=1)
    est = pairwise_distances(X_est)[:, iu[0], iu[1]].ravel()
    true = pairwise_distances(X_true)[:, iu[0], iu[1]].ravel()
    keep = true > 0
    return DistanceRatios(ratios=np.sort(est[keep] / true[keep]),
                          n_excluded=int((~keep).sum()))


def category_distance_matrix(categories):
    """0 for actors sharing a category, 1 otherwise."""
    c = np.asarray(categories)
    return (c[:, None] != c[None, :]).astype(np.float64)


def _upper(D):
    D = np.asarray(D, dtype=np.float64)
    iu = np.triu_indices(D.shape[0], k=1)
    return D[iu]


def mantel_statistic(D1, D2):
    a, b = _upper(D1), _upper(D2)
    if np.std(a) == 0 or np.std(b) == 0:
        raise DegenerateInputError("a distance matrix is constant off the diagonal")
    return float(np.corrcoef(a, b)[0, 1])


def _check_distance_matrix(D):
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise UsageError("distance matrices must be square")
    if not np.allclose(D, D.T) or np.any(np.diag(D) != 0):
        raise UsageError("distance matrices must be symmetric with zero diagonal")
    return D


def mantel_test(D1, D2, n_boot=999, rng=None, exhaustive=False):
    """One-sided Mantel permutation test of positive association.

    The statistic is the Pearson correlation of the upper triangles. The
    p-value is the share of simultaneous row/column permutations of ``D2``
    whose statistic is at least the observed one; either ``n_boot`` random
    permutations or, with ``exhaustive=True``, all ``n!`` of them.
    """
    D1 = _check_distance_matrix(D1)
    D2 = _check_distance_matrix(D2)
    if D1.shape != D2.shape:
        raise UsageError("distance matrices differ in size")
    observed = mantel_statistic(D1, D2)
    n = D1.shape[0]
    a = _upper(D1)
    iu = np.triu_indices(n, k=1)
    tol = 1e-12 * max(1.0, abs(observed))

    def stat(perm):
        b = D2[np.ix_(perm, perm)][iu]
        return np.corrcoef(a, b)[0, 1]

    if exhaustive:
        perms = itertools.permutations(range(n))
        hits = total = 0
        for perm in perms:
            total += 1
            hits += stat(np.array(perm)) >= observed - tol
        return MantelResult(observed, hits / total, total, "exhaustive permutation")
    if n_boot < 1:
        raise UsageError("n_boot must be positive")
    rng = rng if rng is not None else np.random.default_rng()
    hits = sum(stat(rng.permutation(n)) >= observed - tol for _ in range(n_boot))
    return MantelResult(observed, hits / n_boot, int(n_boot))


def autocorrelation(x, max_lag=None):
    """Sample autocorrelations at lags ``0..max_lag``; None for a constant series."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    max_lag = n - 1 if max_lag is None else min(max_lag, n - 1)
    xc = x - x.mean()
    var = np.dot(xc, xc)
    if var == 0:
        return None
    size = 1 << int(math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:max_lag + 1]
    return acov / var


def effective_sample_size(x):
    """Effective sample size with Geyer's initial positive sequence estimator.

    Returns None for a constant series.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    rho = autocorrelation(x)
    if rho is None:
        return None
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / tau)


@dataclass
class ChainDiagnostics:
    trace: np.ndarray
    autocorr: np.ndarray | None
    ess: float | None
    flagged: bool

    def to_dict(self, lags=(1, 5, 10, 50)):
        ac = None
        if self.autocorr is not None:
            ac = {str(k): float(self.autocorr[k]) for k in lags if k < self.autocorr.size}
        return {"n": int(self.trace.size), "ess": self.ess, "autocorr": ac,
                "constant": self.flagged}


def chain_diagnostics(samples, max_lag=100):
    """Per-parameter traces, autocorrelations and effective sample sizes.

    Constant chains are flagged with ``autocorr=None`` and ``ess=None``.
    """
    if len(samples) == 0:
        raise UsageError("empty chain")
    out = {}
    for name, draws in samples.scalars().items():
        ac = autocorrelation(draws, max_lag)
        out[name] = ChainDiagnostics(trace=np.asarray(draws), autocorr=ac,
                                     ess=effective_sample_size(draws), flagged=ac is None)
    out["acceptance"] = dict(samples.acceptance)
    return out
