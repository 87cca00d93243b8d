"""Run configuration: a flat JSON object of key/value pairs.

Keys of :class:`SamplerConfig`, :class:`Hyperparams` (except
``dirichlet_alpha``) and :class:`InitConfig`, plus ``kind`` and
``directed``, configure ``fit``. Keys of :class:`SimConfig` configure
``simulate``. Unknown keys are rejected and missing keys take the dataclass
defaults.
"""

import hashlib
import json
from dataclasses import asdict, fields
from pathlib import Path

from .errors import ParseError, UsageError
from .initialization import InitConfig
from .model import DyadKind, Hyperparams
from .sampler import SamplerConfig
from .simgen import SimConfig

FIT_SECTIONS = (SamplerConfig, Hyperparams, InitConfig)
FIT_EXTRA = {"kind": "count", "directed": True}


def _field_names(cls):
    return [f.name for f in fields(cls)]


def fit_keys():
    keys = []
    for cls in FIT_SECTIONS:
        keys += [k for k in _field_names(cls) if k != "dirichlet_alpha"]
    return keys + list(FIT_EXTRA)


def load_raw(path):
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno) from None
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected a flat JSON object")
    for key, value in obj.items():
        if isinstance(value, (dict, list)):
            raise ParseError(f"{path}: value of {key!r} must be a scalar")
    return obj


def parse_overrides(items):
    """``key=value`` strings from the command line; values parsed as JSON when possible."""
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        try:
            out[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            out[key.strip()] = value
    return out


def _split(raw, allowed):
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")


def _build(cls, raw):
    names = set(_field_names(cls)) - {"dirichlet_alpha"}
    try:
        return cls(**{k: v for k, v in raw.items() if k in names})
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def resolve_fit_config(raw):
    """Returns ``(sampler_cfg, hyper, init_cfg, kind, directed, resolved_dict)``."""
    _split(raw, fit_keys())
    sampler = _build(SamplerConfig, raw)
    hyper = _build(Hyperparams, raw)
    init = _build(InitConfig, raw)
    kind = DyadKind.parse(raw.get("kind", FIT_EXTRA["kind"]))
    directed = bool(raw.get("directed", FIT_EXTRA["directed"]))
    resolved = {}
    for obj in (sampler, hyper, init):
        resolved.update({k: v for k, v in asdict(obj).items() if k != "dirichlet_alpha"})
    resolved.update({"kind": kind.value, "directed": directed})
    return sampler, hyper, init, kind, directed, resolved


def resolve_sim_config(raw):
    _split(raw, _field_names(SimConfig))
    cfg = _build(SimConfig, raw)
    resolved = asdict(cfg)
    resolved["kind"] = cfg.kind.value
    return cfg, resolved


def config_hash(resolved):
    blob = json.dumps(resolved, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
