"""JSON model files: tagged curves, bounding-function trees and provenance.

A model file is ``{"version": ..., "model": {...}, "metadata": {...}}``.
Models referenced from metadata (the source of a transform) are embedded
together with a sha256 digest of their canonical JSON.
"""

from __future__ import annotations

import hashlib
import json

from . import bounding as bf
from .curve import Curve
from .model import ArrivalKind, ArrivalModel, ServiceKind, ServiceModel

FORMAT_VERSION = "1.0"


class SchemaError(ValueError):
    """Malformed model file."""


# -- curves -------------------------------------------------------------------------


def curve_to_dict(c: Curve) -> dict:
    if len(c.times) == 1:
        return {"type": "affine", "rate": c.slopes[0], "burst": c.values[0]}
    if len(c.times) == 2 and c.values == (0.0, 0.0) and c.slopes[0] == 0.0:
        return {"type": "rate_latency", "rate": c.slopes[1], "latency": c.times[1]}
    return {"type": "piecewise", "times": list(c.times), "values": list(c.values), "slopes": list(c.slopes)}


def curve_from_dict(d) -> Curve:
    kind = _get(d, "type")
    if kind == "affine":
        return Curve.affine(_num(d, "rate"), _num(d, "burst", 0.0))
    if kind == "rate_latency":
        return Curve.rate_latency(_num(d, "rate"), _num(d, "latency"))
    if kind == "piecewise":
        return Curve(tuple(_get(d, "times")), tuple(_get(d, "values")), tuple(_get(d, "slopes")))
    raise SchemaError(f"unknown curve type {kind!r}")


# -- bounding functions -------------------------------------------------------------------

# tag -> (class, [(json key, attribute)], [child attributes])
_LEAVES = {
    "constant": (bf.Constant, [("value", "value")]),
    "exponential": (bf.Exponential, [("a", "a"), ("b", "b")]),
    "poisson_chernoff": (bf.PoissonChernoff, [("lambda", "lam"), ("t", "t")]),
    "poisson_tail": (bf.PoissonTail, [("lambda", "lam"), ("t", "t")]),
    "poisson_lower_tail": (bf.PoissonLowerTail, [("mu", "mu"), ("t", "t")]),
    "exp_server_literal": (bf.ExpServerClosedForm, [("mu", "mu"), ("t", "t")]),
}
_TAG_OF = {cls: tag for tag, (cls, _) in _LEAVES.items()}


def bf_to_dict(b) -> dict:
    cls = type(b)
    if cls in _TAG_OF:
        tag = _TAG_OF[cls]
        return {"type": tag, **{key: float(getattr(b, attr)) for key, attr in _LEAVES[tag][1]}}
    if isinstance(b, bf.Scale):
        return {"type": "scale", "factor": b.factor, "base": bf_to_dict(b.base)}
    if isinstance(b, bf.Sum):
        return {"type": "sum", "terms": [bf_to_dict(t) for t in b.terms]}
    if isinstance(b, bf.ClipAtOne):
        return {"type": "clip_one", "base": bf_to_dict(b.base)}
    if isinstance(b, bf.ZeroBeyond):
        return {"type": "zero_beyond", "x0": b.x0, "base": bf_to_dict(b.base)}
    if isinstance(b, bf.WindowIntegral):
        return {"type": "window_integral", "lo": b.lo, "hi": b.hi, "scale": b.scale, "base": bf_to_dict(b.base)}
    if isinstance(b, bf.TailIntegral):
        return {"type": "tail_integral", "base": bf_to_dict(b.base)}
    if isinstance(b, bf.MinPlusConv):
        return {"type": "minplus_conv", "f": bf_to_dict(b.f), "g": bf_to_dict(b.g)}
    raise TypeError(f"cannot serialise {cls.__name__}")


def bf_from_dict(d):
    tag = _get(d, "type")
    try:
        if tag in _LEAVES:
            cls, fields = _LEAVES[tag]
            return cls(**{attr: _num(d, key) for key, attr in fields})
        if tag == "scale":
            return bf.Scale(_num(d, "factor"), bf_from_dict(_get(d, "base")))
        if tag == "sum":
            return bf.Sum(tuple(bf_from_dict(t) for t in _get(d, "terms")))
        if tag == "clip_one":
            return bf.ClipAtOne(bf_from_dict(_get(d, "base")))
        if tag == "zero_beyond":
            return bf.ZeroBeyond(bf_from_dict(_get(d, "base")), _num(d, "x0"))
        if tag == "window_integral":
            return bf.WindowIntegral(bf_from_dict(_get(d, "base")), _num(d, "lo"), _num(d, "hi"), _num(d, "scale"))
        if tag == "tail_integral":
            return bf.TailIntegral(bf_from_dict(_get(d, "base")))
        if tag == "minplus_conv":
            return bf.MinPlusConv(bf_from_dict(_get(d, "f")), bf_from_dict(_get(d, "g")))
    except (TypeError, bf.BoundingClassError) as exc:
        raise SchemaError(f"invalid {tag} node: {exc}") from exc
    raise SchemaError(f"unknown bounding function type {tag!r}")


# -- models ---------------------------------------------------------------------------------


def model_to_dict(m) -> dict:
    if isinstance(m, ArrivalModel):
        out = {"kind": m.kind.value, "curve": curve_to_dict(m.alpha), "bounding_function": bf_to_dict(m.f)}
        if m.theta is not None:
            out["theta"] = m.theta
    elif isinstance(m, ServiceModel):
        out = {"kind": m.kind.value, "curve": curve_to_dict(m.beta), "bounding_function": bf_to_dict(m.g)}
    else:
        raise TypeError(f"not a model: {m!r}")
    out["timescale"] = m.timescale
    return out


def model_from_dict(d, metadata=None):
    kind = _get(d, "kind")
    try:
        curve = curve_from_dict(_get(d, "curve"))
        g = bf_from_dict(_get(d, "bounding_function"))
        T = _num(d, "timescale")
        if kind in ArrivalKind._value2member_map_:
            theta = d.get("theta")
            return ArrivalModel(kind, curve, g, T, theta=theta, metadata=metadata or {})
        if kind in ServiceKind._value2member_map_:
            if "theta" in d:
                raise SchemaError("service models carry no theta")
            return ServiceModel(kind, curve, g, T, metadata=metadata or {})
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from exc
    raise SchemaError(f"unknown model kind {kind!r}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def digest(m) -> str:
    """sha256 of the canonical JSON of a model."""
    return hashlib.sha256(canonical_json(model_to_dict(m)).encode()).hexdigest()


def _is_model(v):
    return isinstance(v, (ArrivalModel, ServiceModel))


def metadata_to_dict(meta) -> dict:
    out = {}
    for key, value in (meta or {}).items():
        if _is_model(value):
            out[key] = model_to_dict(value)
            out[f"{key}_digest"] = digest(value)
        elif isinstance(value, tuple):
            out[key] = list(value)
        else:
            out[key] = value
    return out


def metadata_from_dict(d) -> dict:
    if not isinstance(d, dict):
        raise SchemaError("metadata must be an object")
    out = {}
    for key, value in d.items():
        if key.endswith("_digest") and key[: -len("_digest")] in d:
            continue
        if f"{key}_digest" in d and isinstance(value, dict):
            m = model_from_dict(value)
            if digest(m) != d[f"{key}_digest"]:
                raise SchemaError(f"digest mismatch for embedded model {key!r}")
            out[key] = m
        else:
            out[key] = value
    return out


def to_file_dict(m) -> dict:
    return {"version": FORMAT_VERSION, "model": model_to_dict(m), "metadata": metadata_to_dict(m.metadata)}


def from_file_dict(d):
    if not isinstance(d, dict):
        raise SchemaError("model file must be a JSON object")
    if d.get("version") != FORMAT_VERSION:
        raise SchemaError(f"unsupported model file version {d.get('version')!r}")
    meta = metadata_from_dict(d.get("metadata", {}))
    return model_from_dict(_get(d, "model"), meta)


def dumps(m) -> str:
    return json.dumps(to_file_dict(m), sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads(text: str):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return from_file_dict(d)


def save(m, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(m))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


# -- helpers -------------------------------------------------------------------------------


def _get(d, key):
    if not isinstance(d, dict):
        raise SchemaError(f"expected an object holding {key!r}")
    if key not in d:
        raise SchemaError(f"missing field {key!r}")
    return d[key]


def _num(d, key, default=None):
    if default is not None and key not in d:
        return default
    v = _get(d, key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"field {key!r} must be a number")
    return float(v)
