"""Deterministic JSON reports and CSV/JSON trace files."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import IoError


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _enc(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_enc(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_enc(v, indent, level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _enc(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    if hasattr(obj, "to_json"):
        return _enc(obj.to_json(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with sorted keys and every float at 17 significant digits."""
    return _enc(obj, indent, 0) + "\n"


def emit_trace(trace, fmt: str, path, dim: int | None = None) -> None:
    """Write an iteration trace.

    CSV columns are ``n,x1..xd,step,residual`` where ``step`` on row n is
    d(u_n, u_{n+1}) (blank on the last row).
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown trace format {fmt!r}")
    path = Path(path)
    try:
        if fmt == "json":
            path.write_text(dumps(trace.to_json()))
            return
        if dim is None:
            dim = len(trace.iterates[0]) if trace.iterates else 0
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", *[f"x{i + 1}" for i in range(dim)], "step", "residual"])
            for n, u in enumerate(trace.iterates):
                step = fmt_float(trace.steps[n]) if n < len(trace.steps) else ""
                w.writerow([n, *[fmt_float(c) for c in u], step, fmt_float(trace.residuals[n])])
    except OSError as exc:
        raise IoError(f"cannot write trace to {path}: {exc}") from exc
