"""Starting values for the sampler.

Radii come from each actor's share of total edge weight. Initial positions
come from generalized multidimensional scaling (GMDS) of distance matrices
built from the binarized network: classical MDS at the first time point,
then for each later time point a classical MDS solution aligned to the
previous configuration and blended with it.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateInputError, UsageError
from .model import DyadKind, Hyperparams, ModelParams
from .procrustes import procrustes_align

TAU2_FLOOR = 1e-8


@dataclass
class InitConfig:
    """Settings for :func:`initialize_all`.

    ``gmds_blend`` is the weight kept on the previous time point's positions;
    ``gmds_align`` Procrustes-aligns each new MDS embedding to the previous
    time point before blending.
    The ``*_init`` fields are starting values the data cannot inform;
    ``gamma2_init=None`` means "use the prior mean ``gamma2_0``".
    """

    p: int = 2
    gmds_blend: float = 0.5
    gmds_align: bool = True
    mds_eigen_floor: float = 0.0
    sigma2_init: float = 1e-3
    beta_in_init: float = 1.0
    beta_out_init: float = 1.0
    gamma2_init: float | None = None
    radius_floor: float = 1e-3

    def __post_init__(self):
        if not 0.0 <= self.gmds_blend <= 1.0:
            raise UsageError("gmds_blend must lie in [0, 1]")
        if self.p < 1:
            raise UsageError("p must be a positive integer")
        if self.mds_eigen_floor < 0:
            raise UsageError("mds_eigen_floor must be non-negative")


def init_radii(Y):
    w = Y.weights
    total = w.sum()
    if not total > 0:
        raise DegenerateInputError("network has no positive edge weight")
    share = 0.5 * (w.sum(axis=(0, 2)) + w.sum(axis=(0, 1)))
    r = share / total
    return r / r.sum()


def binarize(Y):
    w = Y.weights if hasattr(Y, "weights") else np.asarray(Y)
    return (w > 0).astype(np.int8)


def init_distances(Y_bin, r):
    """Distance matrices from the binarized network and the radii.

    Mutual ties give ``min(r_i, r_j) / 2``, one-way ties ``(r_i + r_j) / 2``
    and absent ties ``3 (r_i + r_j) / 2``.
    """
    b = np.asarray(Y_bin) > 0
    r = np.asarray(r, dtype=np.float64)
    ties = b.astype(np.int8) + np.swapaxes(b, 1, 2).astype(np.int8)
    r_sum = r[:, None] + r[None, :]
    r_min = np.minimum(r[:, None], r[None, :])
    D = np.where(ties == 2, 0.5 * r_min,
                 np.where(ties == 1, 0.5 * r_sum, 1.5 * r_sum))
    idx = np.arange(r.size)
    D[:, idx, idx] = 0.0
    return D


def _fix_signs(vecs):
    # largest-magnitude entry of each eigenvector made positive, for reproducibility
    pivots = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivots, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def classical_mds(D, p, eigen_floor=0.0):
    """Torgerson scaling of a distance matrix into ``p`` dimensions.

    Eigenvalues of the double-centred squared distances below
    ``eigen_floor`` are clamped to it.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if p > n:
        raise UsageError(f"cannot embed {n} points in {p} dimensions")
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D ** 2) @ J
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1][:p]
    evals = np.maximum(evals[order], eigen_floor)
    evecs = _fix_signs(evecs[:, order])
    X = evecs * np.sqrt(evals)
    return X - X.mean(axis=0)


def gmds(D, cfg):
    D = np.asarray(D, dtype=np.float64)
    T, n = D.shape[:2]
    X = np.empty((T, n, cfg.p))
    X[0] = classical_mds(D[0], cfg.p, cfg.mds_eigen_floor)
    for t in range(1, T):
        current = classical_mds(D[t], cfg.p, cfg.mds_eigen_floor)
        if cfg.gmds_align:
            current = procrustes_align(current, X[t - 1])
        X[t] = cfg.gmds_blend * X[t - 1] + (1.0 - cfg.gmds_blend) * current
    return X


def init_tau2(X1):
    X1 = np.asarray(X1, dtype=np.float64)
    n, p = X1.shape
    return float(np.sum(X1 ** 2) / (n * p))


def initialize_all(Y, cfg=None, hyper=None):
    """Run the full initialization pipeline.

    Returns ``(X, params, hyper)`` where ``hyper`` is a copy of the supplied
    hyperparameters with ``dirichlet_alpha`` and ``tau2_0`` matched to the
    initial radii and initial ``tau2``.
    """
    cfg = cfg or InitConfig()
    hyper = hyper or Hyperparams()
    r = init_radii(Y)
    if np.any(r <= 0):
        # isolated actors; keep them on the open simplex
        r = np.maximum(r, cfg.radius_floor * r[r > 0].min())
        r = r / r.sum()
    D = init_distances(binarize(Y), r)
    X = gmds(D, cfg)
    tau2 = max(init_tau2(X[0]), TAU2_FLOOR)
    gamma2 = None
    if Y.kind is DyadKind.NONNEG_REAL:
        gamma2 = cfg.gamma2_init if cfg.gamma2_init is not None else hyper.gamma2_0
    beta_in, beta_out = cfg.beta_in_init, cfg.beta_out_init
    if not Y.directed:
        beta_out = beta_in
    params = ModelParams(beta_in=beta_in, beta_out=beta_out, radii=r,
                         tau2=tau2, sigma2=cfg.sigma2_init, gamma2=gamma2)
    hyper = replace(hyper, dirichlet_alpha=r.copy(), tau2_0=tau2)
    return X, params, hyper
