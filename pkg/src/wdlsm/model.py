"""Data model and exact density evaluations for the weighted dynamic latent space model.

Dyad values ``y[t, i, j]`` are the weight of the edge sent by actor ``i`` to
actor ``j`` at time ``t``. Actors live in a ``p``-dimensional latent space; the
linear predictor of a dyad is

    eta = beta_in * (1 - d / r_j) + beta_out * (1 - d / r_i)

where ``d`` is the latent distance and ``r`` the vector of actor radii.
Count dyads are Poisson with log-rate ``eta``; non-negative real dyads follow a
tobit model whose uncensored mean is ``eta``.

All evaluations are pure. Sums over dyads are taken time slice by time slice
with ``numpy.sum`` over the masked ``n x n`` slice, then accumulated over time
in increasing ``t``; the order is fixed so results are deterministic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, log_ndtr

from .errors import UsageError

LOG_2PI = math.log(2.0 * math.pi)
SIMPLEX_TOL = 1e-12

__all__ = [
    "DyadKind",
    "DynamicNetwork",
    "LatentTrajectories",
    "ModelParams",
    "Hyperparams",
    "DyadGeometry",
    "distance",
    "linear_predictor",
    "poisson_dyad_loglik",
    "tobit_dyad_loglik",
    "log_norm_sf",
    "pairwise_distances",
    "dyad_geometry",
    "dyad_mask",
    "log_likelihood",
    "log_latent_prior",
    "log_param_prior",
    "inv_gamma_logpdf",
    "dirichlet_logpdf",
]


class DyadKind(str, enum.Enum):
    COUNT = "count"
    NONNEG_REAL = "nonneg"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"count": cls.COUNT, "counts": cls.COUNT, "poisson": cls.COUNT,
                   "nonneg": cls.NONNEG_REAL, "nonneg_real": cls.NONNEG_REAL,
                   "continuous": cls.NONNEG_REAL, "tobit": cls.NONNEG_REAL}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise UsageError(f"unknown dyad kind {value!r}") from None


@dataclass
class DynamicNetwork:
    """A sequence of ``T`` weighted adjacency matrices over the same ``n`` actors.

    Parameters
    ----------
    weights : array of shape (T, n, n)
        Dyad values. The diagonal is ignored and stored as zero.
    kind : DyadKind
        ``COUNT`` for non-negative integers, ``NONNEG_REAL`` for tobit data.
    directed : bool
        If False the matrices must be symmetric and each unordered pair is
        a single observation.
    labels : list of str, optional
        Actor names, index-aligned with the matrix rows.
    """

    weights: np.ndarray
    kind: DyadKind = DyadKind.COUNT
    directed: bool = True
    labels: list | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = DyadKind.parse(self.kind)
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim == 2:
            w = w[None]
        if w.ndim != 3 or w.shape[1] != w.shape[2]:
            raise UsageError(f"weights must have shape (T, n, n), got {w.shape}")
        idx = np.arange(w.shape[1])
        w[:, idx, idx] = 0.0
        if not np.all(np.isfinite(w)):
            raise UsageError("dyad values must be finite")
        if np.any(w < 0):
            raise UsageError("dyad values must be non-negative")
        if self.kind is DyadKind.COUNT and np.any(w != np.round(w)):
            raise UsageError("count networks require integer dyad values")
        if not self.directed and not np.array_equal(w, np.swapaxes(w, 1, 2)):
            raise UsageError("undirected networks require symmetric matrices")
        self.weights = w
        if self.labels is None:
            self.labels = [str(k) for k in range(w.shape[1])]
        elif len(self.labels) != w.shape[1]:
            raise UsageError("labels must have one entry per actor")

    @property
    def T(self):
        return self.weights.shape[0]

    @property
    def n(self):
        return self.weights.shape[1]

    def n_dyads(self):
        """Number of observed dyads over all time points."""
        per_slice = self.n * (self.n - 1)
        if not self.directed:
            per_slice //= 2
        return self.T * per_slice


@dataclass
class LatentTrajectories:
    """Latent positions of every actor at every time point, shape (T, n, p)."""

    positions: np.ndarray

    def __post_init__(self):
        x = np.array(self.positions, dtype=np.float64)
        if x.ndim != 3:
            raise UsageError(f"positions must have shape (T, n, p), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise UsageError("latent positions must be finite")
        self.positions = x

    @property
    def T(self):
        return self.positions.shape[0]

    @property
    def n(self):
        return self.positions.shape[1]

    @property
    def p(self):
        return self.positions.shape[2]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.positions
        return self.positions.astype(dtype)

    def stacked(self):
        """The ``(T*n, p)`` matrix of positions stacked time slice by time slice."""
        return self.positions.reshape(-1, self.p)


@dataclass
class ModelParams:
    """Global coefficients, actor radii and variance parameters.

    ``gamma2`` is the tobit error variance and must be None for count data.
    """

    beta_in: float
    beta_out: float
    radii: np.ndarray
    tau2: float
    sigma2: float
    gamma2: float | None = None

    def __post_init__(self):
        self.radii = np.array(self.radii, dtype=np.float64)
        self.validate()

    def validate(self):
        r = self.radii
        if r.ndim != 1 or r.size == 0:
            raise UsageError("radii must be a non-empty vector")
        if not np.all(r > 0):
            raise UsageError("radii must be strictly positive")
        if abs(r.sum() - 1.0) > SIMPLEX_TOL * max(1, r.size):
            raise UsageError(f"radii must sum to 1 (sum={r.sum()!r})")
        if not (self.tau2 > 0 and self.sigma2 > 0):
            raise UsageError("tau2 and sigma2 must be positive")
        if self.gamma2 is not None and not self.gamma2 > 0:
            raise UsageError("gamma2 must be positive")

    def check_kind(self, kind):
        kind = DyadKind.parse(kind)
        if kind is DyadKind.NONNEG_REAL and self.gamma2 is None:
            raise UsageError("non-negative real networks require gamma2")
        if kind is DyadKind.COUNT and self.gamma2 is not None:
            raise UsageError("count networks take no gamma2")

    def copy(self):
        return ModelParams(self.beta_in, self.beta_out, self.radii.copy(),
                           self.tau2, self.sigma2, self.gamma2)


@dataclass
class Hyperparams:
    """Prior hyperparameters.

    The variance priors are inverse gamma with shape ``2 + delta`` and scale
    ``(1 + delta) * prior_mean``, so their means equal ``tau2_0``, ``sigma2_0``
    and ``gamma2_0``. The coefficients have normal priors with means ``nu_*``
    and variances ``xi_*``; the radii have a Dirichlet prior.
    """

    delta: float = 0.05
    tau2_0: float = 1.0
    sigma2_0: float = 1e-4
    gamma2_0: float = 1.0
    nu_in: float = 1.0
    nu_out: float = 1.0
    xi_in: float = 1000.0
    xi_out: float = 1000.0
    dirichlet_alpha: np.ndarray | None = None

    def __post_init__(self):
        for name in ("delta", "tau2_0", "sigma2_0", "gamma2_0", "xi_in", "xi_out"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if self.dirichlet_alpha is not None:
            self.dirichlet_alpha = np.array(self.dirichlet_alpha, dtype=np.float64)
            if not np.all(self.dirichlet_alpha > 0):
                raise UsageError("dirichlet_alpha entries must be positive")

    def ig_params(self, prior_mean):
        """Shape and scale of the inverse gamma prior with the given mean."""
        return 2.0 + self.delta, (1.0 + self.delta) * prior_mean


@dataclass
class DyadGeometry:
    """Per-dyad derived quantities for one configuration, each of shape (T, n, n)."""

    distance: np.ndarray
    eta: np.ndarray

    @property
    def rate(self):
        return np.exp(self.eta)

    @property
    def latent_mean(self):
        return self.eta


def distance(x_a, x_b):
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    if x_a.shape != x_b.shape:
        raise UsageError(f"dimension mismatch: {x_a.shape} vs {x_b.shape}")
    return float(np.linalg.norm(x_a - x_b))


def linear_predictor(d, r_i, r_j, beta_in, beta_out):
    """Linear predictor of the dyad sent by ``i`` to ``j``.

    Vectorizes over array arguments.
    """
    r_i = np.asarray(r_i, dtype=np.float64)
    r_j = np.asarray(r_j, dtype=np.float64)
    if np.any(r_i <= 0) or np.any(r_j <= 0):
        raise UsageError("radii must be positive")
    if np.any(np.asarray(d) < 0):
        raise UsageError("distances must be non-negative")
    out = beta_in * (1.0 - d / r_j) + beta_out * (1.0 - d / r_i)
    return float(out) if np.ndim(out) == 0 else out


def poisson_dyad_loglik(y, log_lambda):
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0):
        raise UsageError("count dyads must be non-negative")
    out = y * log_lambda - np.exp(log_lambda) - gammaln(y + 1.0)
    return float(out) if np.ndim(out) == 0 else out


def log_norm_sf(z):
    """``log(1 - Phi(z))`` without cancellation for large ``z``."""
    return log_ndtr(-np.asarray(z, dtype=np.float64))


def tobit_dyad_loglik(y, mu, gamma2):
    """Tobit log density: normal density for ``y > 0``, censoring mass at ``y = 0``."""
    if not gamma2 > 0:
        raise UsageError("gamma2 must be positive")
    y = np.asarray(y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    gamma = math.sqrt(gamma2)
    positive = -0.5 * (LOG_2PI + math.log(gamma2)) - 0.5 * (y - mu) ** 2 / gamma2
    out = np.where(y > 0, positive, log_norm_sf(mu / gamma))
    return float(out) if np.ndim(out) == 0 else out


def pairwise_distances(X):
    """Euclidean distance matrices of shape (T, n, n) for positions (T, n, p)."""
    X = np.asarray(X, dtype=np.float64)
    diff = X[:, :, None, :] - X[:, None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def dyad_geometry(X, params):
    d = pairwise_distances(X)
    r = params.radii
    # eta[t, i, j]: sender i, receiver j
    eta = params.beta_in * (1.0 - d / r[None, None, :]) \
        + params.beta_out * (1.0 - d / r[None, :, None])
    return DyadGeometry(distance=d, eta=eta)


def dyad_mask(n, directed=True):
    """Boolean (n, n) mask of observed dyads: off-diagonal, or upper triangle."""
    if directed:
        return ~np.eye(n, dtype=bool)
    return np.triu(np.ones((n, n), dtype=bool), k=1)


def _check_shapes(Y, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[:2] != (Y.T, Y.n):
        raise UsageError(
            f"positions of shape {X.shape} do not match a network with T={Y.T}, n={Y.n}")
    return X


def dyad_loglik_matrix(Y, eta, params):
    """Per-dyad log-likelihood array of shape (T, n, n), diagonal included."""
    if Y.kind is DyadKind.COUNT:
        return poisson_dyad_loglik(Y.weights, eta)
    return tobit_dyad_loglik(Y.weights, eta, params.gamma2)


def log_likelihood(Y, X, params):
    """Exact log-likelihood of the whole dynamic network.

    Directed networks sum over all ordered pairs ``i != j``; undirected ones
    count each unordered pair once.
    """
    params.check_kind(Y.kind)
    X = _check_shapes(Y, X)
    if not Y.directed and params.beta_in != params.beta_out:
        raise UsageError("undirected networks require beta_in == beta_out")
    geom = dyad_geometry(X, params)
    terms = dyad_loglik_matrix(Y, geom.eta, params)
    mask = dyad_mask(Y.n, Y.directed)
    total = 0.0
    for t in range(Y.T):
        total += float(np.sum(terms[t][mask]))
    return total


def _normal_logpdf_sq(sq_norm, var, dim):
    return -0.5 * dim * (LOG_2PI + math.log(var)) - 0.5 * sq_norm / var


def log_latent_prior(X, tau2, sigma2):
    """Log density of the trajectories under the Gaussian random-walk prior."""
    if not (tau2 > 0 and sigma2 > 0):
        raise UsageError("tau2 and sigma2 must be positive")
    X = np.asarray(X, dtype=np.float64)
    T, n, p = X.shape
    total = _normal_logpdf_sq(float(np.sum(X[0] ** 2)), tau2, n * p)
    for t in range(1, T):
        step = X[t] - X[t - 1]
        total += _normal_logpdf_sq(float(np.sum(step ** 2)), sigma2, n * p)
    return total


def inv_gamma_logpdf(x, shape, scale):
    return (shape * math.log(scale) - math.lgamma(shape)
            - (shape + 1.0) * math.log(x) - scale / x)


def dirichlet_logpdf(x, alpha):
    x = np.asarray(x, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    return float(gammaln(alpha.sum()) - gammaln(alpha).sum()
                 + np.sum((alpha - 1.0) * np.log(x)))


def normal_logpdf(x, mean, var):
    return -0.5 * (LOG_2PI + math.log(var)) - 0.5 * (x - mean) ** 2 / var


def log_param_prior(params, hyper, directed=True):
    """Joint log prior density of the model parameters.

    For undirected networks the single shared coefficient carries the
    ``beta_in`` prior only.
    """
    r = params.radii
    if abs(r.sum() - 1.0) > SIMPLEX_TOL * max(1, r.size) or np.any(r <= 0):
        raise UsageError("radii are off the simplex")
    if hyper.dirichlet_alpha is None or hyper.dirichlet_alpha.shape != r.shape:
        raise UsageError("dirichlet_alpha must be set with one entry per actor")
    total = inv_gamma_logpdf(params.tau2, *hyper.ig_params(hyper.tau2_0))
    total += inv_gamma_logpdf(params.sigma2, *hyper.ig_params(hyper.sigma2_0))
    if params.gamma2 is not None:
        total += inv_gamma_logpdf(params.gamma2, *hyper.ig_params(hyper.gamma2_0))
    total += normal_logpdf(params.beta_in, hyper.nu_in, hyper.xi_in)
    if directed:
        total += normal_logpdf(params.beta_out, hyper.nu_out, hyper.xi_out)
    total += dirichlet_logpdf(r, hyper.dirichlet_alpha)
    return total
