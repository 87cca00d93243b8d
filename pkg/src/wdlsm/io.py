"""File formats: edge lists, posterior draw tables, position tensors, truth sidecars.

Edge list
    UTF-8 CSV with header ``t,i,j,w``; ``t`` is a 1-based time index, ``i``
    and ``j`` are actor labels and ``w`` a non-negative weight. Unlisted dyads
    are zero. Lines starting with ``#`` are comments; comments of the form
    ``# key=value`` before the header are metadata (e.g. ``kind``, ``seed``).

Scalar draw table
    Comment lines with the seed and config hash, then ``iteration,value``
    rows (or ``iteration,<label>,...`` for the radii).

Position tensor (``positions.bin``)
    One ASCII line ``WDLSM-POSITIONS 1``, one line of JSON with ``shape``
    ``[S, T, n, p]``, ``dtype`` (``<f8``), ``seed`` and ``config_hash``, then
    ``S*T*n*p`` little-endian float64 values in C order.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, ParseError, UsageError
from .model import DynamicNetwork, DyadKind

POSITIONS_MAGIC = b"WDLSM-POSITIONS 1\n"


def _read_lines(path):
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not UTF-8: {exc}") from None


def read_metadata(path):
    """``# key=value`` comment lines that precede the header."""
    meta = {}
    for line in _read_lines(path):
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if "=" in body:
            key, value = body.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def read_edge_list(path, kind, directed=True, T=None):
    """Parse an edge list into a dense :class:`DynamicNetwork`.

    Duplicate ``(t, i, j)`` rows are summed for count data and rejected for
    non-negative real data. For undirected data ``(i, j)`` and ``(j, i)``
    name the same dyad. Labels are indexed in order of first appearance.
    """
    kind = DyadKind.parse(kind)
    rows = []
    labels = {}
    header_seen = False
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = next(csv.reader([line]))
        if not header_seen:
            if [f.strip() for f in fields] != ["t", "i", "j", "w"]:
                raise ParseError("expected header 't,i,j,w'", lineno)
            header_seen = True
            continue
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", lineno)
        t_s, i_s, j_s, w_s = (f.strip() for f in fields)
        try:
            t = int(t_s)
        except ValueError:
            raise ParseError(f"time index {t_s!r} is not an integer", lineno) from None
        if t < 1 or (T is not None and t > T):
            raise ParseError(f"time index {t} out of range", lineno)
        try:
            w = float(w_s)
        except ValueError:
            raise ParseError(f"weight {w_s!r} is not numeric", lineno) from None
        if not math.isfinite(w) or w < 0:
            raise ParseError(f"weight {w_s!r} must be finite and non-negative", lineno)
        if kind is DyadKind.COUNT and w != round(w):
            raise ParseError(f"count weight {w_s!r} is not an integer", lineno)
        if not i_s or not j_s:
            raise ParseError("empty actor label", lineno)
        for lab in (i_s, j_s):
            labels.setdefault(lab, len(labels))
        rows.append((lineno, t, labels[i_s], labels[j_s], w))
    if not header_seen:
        raise ParseError("missing header 't,i,j,w'")
    if not rows:
        raise DegenerateInputError(f"{path} contains no dyads")
    T = T if T is not None else max(r[1] for r in rows)
    n = len(labels)
    w = np.zeros((T, n, n))
    seen = set()
    for lineno, t, i, j, value in rows:
        if i == j:
            continue
        key = (t, i, j) if directed else (t, min(i, j), max(i, j))
        if key in seen and kind is DyadKind.NONNEG_REAL:
            raise ParseError(f"duplicate dyad at t={t}", lineno)
        seen.add(key)
        w[t - 1, i, j] += value
        if not directed:
            w[t - 1, j, i] += value
    return DynamicNetwork(weights=w, kind=kind, directed=directed, labels=list(labels))


def write_edge_list(Y, path, meta=None):
    """Write the positive dyads of ``Y``; zeros are implicit."""
    meta = dict(meta or {})
    meta.setdefault("kind", Y.kind.value)
    meta.setdefault("directed", str(Y.directed).lower())
    lines = [f"# {k}={v}" for k, v in meta.items()]
    lines.append("t,i,j,w")
    for t in range(Y.T):
        ii, jj = np.nonzero(Y.weights[t])
        for i, j in zip(ii, jj):
            if not Y.directed and j < i:
                continue
            lines.append(f"{t + 1},{Y.labels[i]},{Y.labels[j]},{_fmt(Y.weights[t, i, j])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(x):
    x = float(x)
    return str(int(x)) if x == int(x) and abs(x) < 2 ** 53 else repr(x)


def _meta_lines(meta):
    return [f"# {k}={v}" for k, v in meta.items()]


def write_scalar_draws(path, draws, meta):
    lines = _meta_lines(meta) + ["iteration,value"]
    lines += [f"{k},{float(v)!r}" for k, v in enumerate(draws)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_matrix_draws(path, draws, columns, meta):
    lines = _meta_lines(meta) + ["iteration," + ",".join(columns)]
    for k, row in enumerate(draws):
        lines.append(f"{k}," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_draws(path):
    """Read a draw table; returns ``(values, columns, meta)``."""
    meta, data, columns = {}, [], None
    for lineno, line in enumerate(_read_lines(path), start=1):
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        if not line.strip():
            continue
        fields = line.split(",")
        if columns is None:
            columns = fields[1:]
            continue
        try:
            data.append([float(f) for f in fields[1:]])
        except ValueError:
            raise ParseError("non-numeric draw", lineno) from None
    values = np.array(data, dtype=np.float64).reshape(-1, len(columns or [None]))
    if columns == ["value"]:
        values = values[:, 0]
    return values, columns, meta


def write_positions(path, X, meta):
    X = np.ascontiguousarray(X, dtype="<f8")
    header = dict(meta)
    header.update({"shape": list(X.shape), "dtype": "<f8"})
    with open(path, "wb") as fh:
        fh.write(POSITIONS_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        fh.write(X.tobytes(order="C"))


def read_positions(path):
    with open(path, "rb") as fh:
        if fh.readline() != POSITIONS_MAGIC:
            raise ParseError(f"{path} is not a position tensor")
        header = json.loads(fh.readline().decode("ascii"))
        data = np.frombuffer(fh.read(), dtype=header["dtype"])
    shape = tuple(header["shape"])
    if data.size != int(np.prod(shape)):
        raise ParseError(f"{path} is truncated")
    return data.reshape(shape).astype(np.float64), header


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno) from None


def write_truth(path, X, params, labels, meta):
    obj = dict(meta)
    obj.update({
        "labels": list(labels),
        "positions": np.asarray(X).tolist(),
        "beta_in": params.beta_in, "beta_out": params.beta_out,
        "radii": params.radii.tolist(), "sigma2": params.sigma2, "tau2": params.tau2,
        "gamma2": params.gamma2,
    })
    write_json(path, obj)


def read_truth(path):
    obj = read_json(path)
    for key in ("labels", "positions"):
        if key not in obj:
            raise ParseError(f"{path}: missing {key!r}")
    obj["positions"] = np.array(obj["positions"], dtype=np.float64)
    return obj


def reorder_to_labels(X, from_labels, to_labels):
    """Permute the actor axis of (T, n, p) positions from one label order to another."""
    index = {lab: k for k, lab in enumerate(from_labels)}
    try:
        order = [index[lab] for lab in to_labels]
    except KeyError as exc:
        raise UsageError(f"actor {exc.args[0]!r} missing from truth sidecar") from None
    return np.asarray(X)[:, order]


def read_categories(path):
    """Exogenous actor attributes: CSV with header ``label,<var>...``."""
    lines = [l for l in _read_lines(path) if l.strip() and not l.startswith("#")]
    if not lines:
        raise DegenerateInputError(f"{path} is empty")
    header = next(csv.reader([lines[0]]))
    if header[0].strip() != "label" or len(header) < 2:
        raise ParseError("expected header 'label,<variable>,...'", 1)
    out = {name.strip(): {} for name in header[1:]}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = next(csv.reader([line]))
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields", lineno)
        for name, value in zip(header[1:], fields[1:]):
            out[name.strip()][fields[0].strip()] = value.strip()
    return out
