"""Synthetic dynamic networks following the clustered simulation design.

Initial positions come from an equal-weight mixture of ``n_clusters``
Gaussians whose means are themselves Gaussian; 9/10 of the total spread
``cluster_spread2`` is between clusters and 1/10 within. Radii are one
Dirichlet draw favouring actors near the origin. Later positions follow the
Gaussian random walk with variance ``sigma2``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, NumericalError, UsageError
from .model import DynamicNetwork, DyadKind, ModelParams, dyad_geometry

ETA_MAX = 700.0
_MAX_REDRAWS = 100


@dataclass
class SimConfig:
    n: int = 100
    T: int = 10
    p: int = 2
    n_clusters: int = 10
    cluster_spread2: float = 2e-5
    beta_in: float = 3.0
    beta_out: float = 1.0
    sigma2: float = 1e-6
    gamma2: float = 4.0
    kind: DyadKind = DyadKind.COUNT
    directed: bool = True
    seed: int = 0

    def __post_init__(self):
        self.kind = DyadKind.parse(self.kind)
        if min(self.n, self.T, self.p, self.n_clusters) < 1:
            raise UsageError("dimensions and n_clusters must be positive")
        if not self.cluster_spread2 > 0 or self.sigma2 < 0 or not self.gamma2 > 0:
            raise UsageError("variances must be positive")
        if not self.directed and self.beta_in != self.beta_out:
            raise UsageError("undirected simulation requires beta_in == beta_out")


def simulate_latent(cfg, rng):
    between = 0.9 * cfg.cluster_spread2
    within = 0.1 * cfg.cluster_spread2
    means = rng.normal(0.0, np.sqrt(between), size=(cfg.n_clusters, cfg.p))
    labels = rng.integers(cfg.n_clusters, size=cfg.n)
    X = np.empty((cfg.T, cfg.n, cfg.p))
    X[0] = means[labels] + rng.normal(0.0, np.sqrt(within), size=(cfg.n, cfg.p))
    for t in range(1, cfg.T):
        X[t] = X[t - 1] + rng.normal(0.0, np.sqrt(cfg.sigma2), size=(cfg.n, cfg.p))
    return X


def radii_concentration(X1):
    """Dirichlet parameters ``n * (1/||x_i||) / max_k (1/||x_k||)``."""
    norms = np.linalg.norm(np.asarray(X1, dtype=np.float64), axis=1)
    if np.any(norms == 0):
        raise DegenerateInputError("an actor sits exactly at the origin")
    inv = 1.0 / norms
    return X1.shape[0] * inv / inv.max()


def simulate_radii(X1, rng):
    alpha = radii_concentration(X1)
    for _ in range(_MAX_REDRAWS):
        r = rng.dirichlet(alpha)
        if np.all(r > 0):
            return r / r.sum()
    raise DegenerateInputError("Dirichlet draws keep underflowing to zero")


def simulate_network(X, params, kind, rng, directed=True):
    kind = DyadKind.parse(kind)
    X = np.asarray(X, dtype=np.float64)
    eta = dyad_geometry(X, params).eta
    T, n, _ = eta.shape
    if kind is DyadKind.COUNT:
        if np.max(eta) > ETA_MAX:
            raise NumericalError(
                f"log-rate {np.max(eta):.1f} exceeds {ETA_MAX}; generative parameters are unrealistic")
        y = rng.poisson(np.exp(eta)).astype(np.float64)
    else:
        y_star = eta + rng.normal(0.0, np.sqrt(params.gamma2), size=eta.shape)
        y = np.where(y_star > 0, y_star, 0.0)
    if not directed:
        upper = np.triu(y, k=1)
        y = upper + np.swapaxes(upper, 1, 2)
    idx = np.arange(n)
    y[:, idx, idx] = 0.0
    return DynamicNetwork(weights=y, kind=kind, directed=directed)


def simulate(cfg):
    """Draw a full synthetic dataset; returns ``(Y, X, params)``."""
    rng = np.random.default_rng(cfg.seed)
    for _ in range(_MAX_REDRAWS):
        X = simulate_latent(cfg, rng)
        if np.all(np.linalg.norm(X[0], axis=1) > 0):
            break
    else:
        raise DegenerateInputError("latent draws keep landing on the origin")
    r = simulate_radii(X[0], rng)
    params = ModelParams(beta_in=cfg.beta_in, beta_out=cfg.beta_out, radii=r,
                         tau2=cfg.cluster_spread2, sigma2=max(cfg.sigma2, 1e-300),
                         gamma2=cfg.gamma2 if cfg.kind is DyadKind.NONNEG_REAL else None)
    Y = simulate_network(X, params, cfg.kind, rng, cfg.directed)
    return Y, X, params
