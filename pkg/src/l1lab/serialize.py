"""JSON schemas and dict conversions for metrics, embeddings, families and
certificates, plus a canonical writer (sorted keys, 17 significant digits).
"""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import InvalidArgumentError
from .measures import MeasureFamily
from .metric import (
    Embedding,
    FiniteMetricSpace,
    infer_kary_tree,
    is_star,
    kary_tree_metric,
    star_metric,
    uniform_metric,
)
from .pipeline import PipelineCertificate

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM}

METRIC_SCHEMA = {
    "type": "object",
    "required": ["n", "dist"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        # strictly lower triangle, row-major: (1,0), (2,0), (2,1), (3,0), ...
        "dist": _VEC,
        "labels": {"type": "array", "items": {"type": "string"}},
    },
}

EMBEDDING_SCHEMA = {
    "type": "object",
    "required": ["n", "dim", "norm", "points"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "dim": {"type": "integer", "minimum": 1},
        "norm": {"enum": ["l1", "l2"]},
        "points": {"type": "array", "items": _VEC},
        "source": {"type": "object"},
        "meta": {"type": "object"},
    },
}

FAMILY_SCHEMA = {
    "type": "object",
    "required": ["k", "measures"],
    "properties": {
        "k": {"type": "integer", "minimum": 0},
        "measures": {"type": "array", "items": _VEC},
    },
}

CERTIFICATE_SCHEMA = {
    "type": "object",
    "required": ["eps", "n", "k", "stage_families", "coordinate_set_A", "witness_sets_W",
                 "restriction_sets_Y", "truncation_sets_Z", "checks"],
    "properties": {
        "stage_families": {"type": "array", "items": FAMILY_SCHEMA, "minItems": 4, "maxItems": 4},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "lhs", "rhs", "pass"],
                "properties": {"name": {"type": "string"}, "lhs": _NUM, "rhs": _NUM,
                               "pass": {"type": "boolean"}},
            },
        },
    },
}

KAHANE_SCHEMA = {
    "type": "object",
    "required": ["eps", "range", "frequencies", "amplitudes", "achieved_eps"],
    "properties": {"range": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                   "frequencies": _VEC, "amplitudes": _VEC},
}


def validate(data: dict, schema: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        raise InvalidArgumentError(f"schema violation: {exc.message}") from exc


# --------------------------------------------------------------------------


def metric_to_dict(m: FiniteMetricSpace) -> dict:
    i, j = np.tril_indices(m.n, k=-1)
    out = {"n": m.n, "dist": m.dist[i, j].tolist()}
    if m.labels is not None:
        out["labels"] = [str(x) for x in m.labels]
    return out


def metric_from_dict(data: dict) -> FiniteMetricSpace:
    validate(data, METRIC_SCHEMA)
    n = int(data["n"])
    flat = np.asarray(data["dist"], dtype=float)
    if flat.size != n * (n - 1) // 2:
        raise InvalidArgumentError(f"expected {n * (n - 1) // 2} distances, got {flat.size}")
    d = np.zeros((n, n))
    i, j = np.tril_indices(n, k=-1)
    d[i, j] = flat
    d[j, i] = flat
    return FiniteMetricSpace(d, labels=data.get("labels"))


def _source_to_dict(m: FiniteMetricSpace) -> dict:
    if is_star(m):
        return {"kind": "star", "n": m.n}
    try:
        k, h = infer_kary_tree(m)
        return {"kind": "kary_tree", "k": k, "h": h}
    except InvalidArgumentError:
        pass
    return dict(metric_to_dict(m), kind="table")


def _source_from_dict(data: dict, n: int) -> FiniteMetricSpace:
    kind = data.get("kind", "table")
    if kind == "star":
        return star_metric(int(data.get("n", n)))
    if kind == "kary_tree":
        return kary_tree_metric(int(data["k"]), int(data["h"]))
    if kind == "uniform":
        return uniform_metric(int(data.get("n", n)), float(data.get("scale", 2.0)))
    return metric_from_dict({key: v for key, v in data.items() if key != "kind"})


def embedding_to_dict(e: Embedding) -> dict:
    return {
        "n": e.n,
        "dim": e.dim,
        "norm": e.norm,
        "points": e.points.tolist(),
        "source": _source_to_dict(e.source),
        "meta": {k: v for k, v in e.meta.items() if k != "kahane"},
    }


def embedding_from_dict(data: dict) -> Embedding:
    """Load an embedding; a missing ``source`` means the n-point star."""
    validate(data, EMBEDDING_SCHEMA)
    n = int(data["n"])
    points = np.asarray(data["points"], dtype=float).reshape(n, int(data["dim"]))
    source = _source_from_dict(data["source"], n) if "source" in data else star_metric(n)
    return Embedding(source, points, data["norm"], dict(data.get("meta", {})))


def family_to_dict(f: MeasureFamily) -> dict:
    return {"k": f.k, "measures": f.weights.tolist()}


def family_from_dict(data: dict) -> MeasureFamily:
    validate(data, FAMILY_SCHEMA)
    return MeasureFamily(np.asarray(data["measures"], dtype=float).reshape(-1, int(data["k"])))


def certificate_to_dict(c: PipelineCertificate) -> dict:
    return c.to_dict()


def certificate_from_dict(data: dict) -> PipelineCertificate:
    validate(data, CERTIFICATE_SCHEMA)
    return PipelineCertificate.from_dict(data)


# --------------------------------------------------------------------------


def _encode(obj, out: list) -> None:
    if isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise InvalidArgumentError(f"cannot serialize non-finite value {x}")
        out.append(format(x, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for n, key in enumerate(sorted(obj, key=str)):
            if n:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for n, item in enumerate(obj):
            if n:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, floats at 17 significant digits."""
    out: list = []
    _encode(obj, out)
    return "".join(out)
