"""Transformations applied to non-negative real networks before fitting."""

from dataclasses import replace

import numpy as np

from .errors import DegenerateInputError, UsageError
from .model import DynamicNetwork, DyadKind


def _require_real(Y):
    if Y.kind is not DyadKind.NONNEG_REAL:
        raise UsageError("preprocessing applies to non-negative real networks only")


def _derive(Y, weights, step):
    meta = dict(Y.metadata)
    meta["preprocess"] = meta.get("preprocess", []) + [step]
    return DynamicNetwork(weights=weights, kind=Y.kind, directed=Y.directed,
                          labels=list(Y.labels), metadata=meta)


def preprocess_rescale_total(Y):
    """Scale each time slice so every slice total equals the mean slice total."""
    _require_real(Y)
    totals = Y.weights.sum(axis=(1, 2))
    if np.any(totals <= 0):
        raise DegenerateInputError("a time slice has zero total weight")
    factors = totals.mean() / totals
    return _derive(Y, Y.weights * factors[:, None, None], "rescale_total")


def preprocess_log(Y):
    """``log(w)`` for positive weights; zeros stay zero."""
    _require_real(Y)
    w = Y.weights
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = np.log(w[pos])
    if np.any(out < 0):
        raise DegenerateInputError(
            "log of weights below 1 is negative; rescale first or use log1p")
    return _derive(Y, out, "log")


def preprocess_log1p(Y):
    _require_real(Y)
    return _derive(Y, np.log1p(Y.weights), "log1p")
