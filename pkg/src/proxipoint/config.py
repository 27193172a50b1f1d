"""JSON instance configs: schema validation, loading and serialization."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .dsl import parse_map, parse_relation
from .engine import CONTRACTION_TYPES, ProximalInstance, Tolerances
from .errors import ProxipointError, SchemaError
from .metric import DEFAULT_REFINE_STEPS, DEFAULT_START_RESOLUTION, DEFAULT_TRUNC_RADIUS, Box, FiniteSet, Interval, Metric, Segment, Union
from .relations import DEFAULT_SEED, catalog_relation
from .solvers import DEFAULT_MAX_ITER, DEFAULT_P_MAX

_BOUND = {"oneOf": [{"type": "number"}, {"type": "null"}, {"enum": ["inf", "-inf"]}]}
_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_TRUNC = {"type": "number", "exclusiveMinimum": 0}

REGION_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"shape": {"const": "interval"}, "lo": _BOUND, "hi": _BOUND, "trunc_radius": _TRUNC},
            "required": ["shape", "lo", "hi"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "shape": {"const": "box"},
                "intervals": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "items": _BOUND, "minItems": 2, "maxItems": 2},
                },
                "trunc_radius": _TRUNC,
            },
            "required": ["shape", "intervals"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"shape": {"const": "segment"}, "start": _POINT, "end": _POINT, "trunc_radius": _TRUNC},
            "required": ["shape", "start", "end"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "shape": {"const": "finite"},
                "points": {"type": "array", "items": _POINT, "minItems": 1},
                "trunc_radius": _TRUNC,
            },
            "required": ["shape", "points"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "shape": {"const": "union"},
                "parts": {"type": "array", "items": {"$ref": "#/$defs/region"}, "minItems": 1},
                "trunc_radius": _TRUNC,
            },
            "required": ["shape", "parts"],
            "additionalProperties": False,
        },
    ]
}

INSTANCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"region": REGION_SCHEMA},
    "type": "object",
    "properties": {
        "metric": {
            "type": "object",
            "properties": {"kind": {"enum": ["L1", "L2", "Linf"]}, "dim": {"type": "integer", "minimum": 1}},
            "required": ["kind", "dim"],
            "additionalProperties": False,
        },
        "G": {"$ref": "#/$defs/region"},
        "H": {"$ref": "#/$defs/region"},
        "map": {"type": "string"},
        "relation": {
            "type": "object",
            "properties": {
                "text": {"type": "string"},
                "catalog": {"type": "string"},
                "params": {"type": "object", "additionalProperties": {"type": "number"}},
                "class": {"enum": ["A", "Aprime"]},
            },
            "oneOf": [{"required": ["text"]}, {"required": ["catalog", "params"]}],
            "additionalProperties": False,
        },
        "contraction_type": {"enum": list(CONTRACTION_TYPES)},
        "solver": {
            "type": "object",
            "properties": {
                "scheme": {"enum": list(CONTRACTION_TYPES)},
                "x0": _POINT,
                "tolerances": {
                    "type": "object",
                    "properties": {
                        k: {"type": "number", "exclusiveMinimum": 0}
                        for k in ("tol_feas", "tol_residual", "tol_cert", "tol_step")
                    },
                    "additionalProperties": False,
                },
                "max_iter": {"type": "integer", "minimum": 1},
                "p_max": {"type": "integer", "minimum": 1},
                "resolution": {"type": "number", "exclusiveMinimum": 0},
                "refine_steps": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "trace_path": {"type": ["string", "null"]},
                "format": {"enum": ["csv", "json"]},
            },
            "additionalProperties": False,
        },
    },
    "required": ["metric", "G", "H", "map", "relation"],
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    instance: ProximalInstance
    scheme: str
    x0: tuple | None = None
    max_iter: int = DEFAULT_MAX_ITER
    p_max: int = DEFAULT_P_MAX
    trace_path: str | None = None
    trace_format: str = "csv"
    raw: dict = field(default_factory=dict, repr=False)


def _bound(v, default):
    if v is None:
        return default
    if isinstance(v, str):
        return math.inf if v == "inf" else -math.inf
    return float(v)


def region_from_json(obj: dict):
    R = obj.get("trunc_radius", DEFAULT_TRUNC_RADIUS)
    shape = obj["shape"]
    if shape == "interval":
        return Interval(_bound(obj["lo"], -math.inf), _bound(obj["hi"], math.inf), R)
    if shape == "box":
        lo = tuple(_bound(a, -math.inf) for a, _ in obj["intervals"])
        hi = tuple(_bound(b, math.inf) for _, b in obj["intervals"])
        return Box(lo, hi, R)
    if shape == "segment":
        return Segment(obj["start"], obj["end"], R)
    if shape == "finite":
        return FiniteSet(tuple(tuple(p) for p in obj["points"]), R)
    return Union(tuple(region_from_json(p) for p in obj["parts"]), R)


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def instance_from_dict(doc: dict, seed: int | None = None) -> RunConfig:
    """Validate and compile a config document."""
    validator = jsonschema.Draft202012Validator(INSTANCE_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(list(e.absolute_path)), _path(e)))
    if errors:
        err = errors[0]
        raise SchemaError(_path(err), err.message)
    try:
        metric = Metric(doc["metric"]["kind"], doc["metric"]["dim"])
        G = region_from_json(doc["G"])
        H = region_from_json(doc["H"])
    except (ValueError, ProxipointError) as exc:
        raise SchemaError("G/H", str(exc)) from exc
    for key, region in (("G", G), ("H", H)):
        if region.dim != metric.dim:
            raise SchemaError(key, f"region dimension {region.dim} != metric.dim {metric.dim}")
    S = parse_map(doc["map"], arity=metric.dim)
    if S.out_dim != metric.dim:
        raise SchemaError("map", f"map has {S.out_dim} output coordinate(s), metric.dim is {metric.dim}")
    rel = doc["relation"]
    cls = rel.get("class", "A")
    if "text" in rel:
        f = parse_relation(rel["text"], cls, rel.get("params"))
    else:
        f = catalog_relation(rel["catalog"], rel["params"], cls)
    solver = doc.get("solver", {})
    tol = Tolerances(**solver.get("tolerances", {}))
    ctype = doc.get("contraction_type", "first")
    instance = ProximalInstance(
        metric,
        G,
        H,
        S,
        f,
        ctype,
        tol,
        solver.get("resolution", DEFAULT_START_RESOLUTION),
        solver.get("refine_steps", DEFAULT_REFINE_STEPS),
        solver.get("seed", DEFAULT_SEED) if seed is None else seed,
    )
    x0 = solver.get("x0")
    if x0 is not None and len(x0) != metric.dim:
        raise SchemaError("solver/x0", f"x0 has dimension {len(x0)}, metric.dim is {metric.dim}")
    out = doc.get("output", {})
    return RunConfig(
        instance,
        solver.get("scheme", ctype),
        None if x0 is None else tuple(float(c) for c in x0),
        solver.get("max_iter", DEFAULT_MAX_ITER),
        solver.get("p_max", DEFAULT_P_MAX),
        out.get("trace_path"),
        out.get("format", "csv"),
        doc,
    )


def load_config(path, seed: int | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(str(path), f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), f"invalid JSON: {exc}") from exc
    return instance_from_dict(doc, seed)


def load_instance(path, seed: int | None = None) -> ProximalInstance:
    return load_config(path, seed).instance


def instance_to_dict(instance: ProximalInstance, **solver) -> dict:
    """Inverse of instance_from_dict (DSL texts are re-printed canonically)."""
    f = instance.f
    rel = {"text": f.to_text(), "class": f.declared_class}
    doc = {
        "metric": {"kind": instance.metric.kind, "dim": instance.metric.dim},
        "G": instance.G.to_json(),
        "H": instance.H.to_json(),
        "map": instance.S.to_text(),
        "relation": rel,
        "contraction_type": instance.contraction_type,
        "solver": {
            "tolerances": instance.tolerances.to_json(),
            "resolution": instance.resolution,
            "refine_steps": instance.refine_steps,
            "seed": instance.seed,
            **{k: v for k, v in solver.items() if v is not None},
        },
    }
    return doc
