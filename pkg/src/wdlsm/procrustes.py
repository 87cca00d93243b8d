"""Rigid (rotation, reflection, translation) Procrustes alignment."""

import numpy as np

from .errors import UsageError


def procrustes_align(X, target):
    """Rigidly move the rows of ``X`` as close as possible to ``target``.

    Finds the orthogonal matrix ``R`` and translation minimizing the Frobenius
    norm ``||X R + c - target||``. No scaling is applied.

    Parameters
    ----------
    X, target : arrays of shape (m, p)

    Returns
    -------
    aligned : array of shape (m, p)
    """
    X = np.asarray(X, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if X.shape != target.shape:
        raise UsageError(f"shape mismatch: {X.shape} vs {target.shape}")
    x_mean = X.mean(axis=0)
    t_mean = target.mean(axis=0)
    Xc = X - x_mean
    Tc = target - t_mean
    U, _, Vt = np.linalg.svd(Xc.T @ Tc)
    R = U @ Vt
    return Xc @ R + t_mean


def align_trajectories(X, target):
    """Align (T, n, p) trajectories as one stacked ``(T*n, p)`` configuration."""
    X = np.asarray(X, dtype=np.float64)
    shape = X.shape
    aligned = procrustes_align(X.reshape(-1, shape[-1]),
                               np.asarray(target).reshape(-1, shape[-1]))
    return aligned.reshape(shape)
