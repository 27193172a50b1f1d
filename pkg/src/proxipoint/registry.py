"""The worked examples as runnable fixtures, and the classify/certify/solve pipeline."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .config import RunConfig, instance_from_dict, instance_to_dict, load_config
from .engine import ProximalPair, certify_contraction, compute_proximal_pair
from .errors import UnknownExample
from .metric import as_point
from .relations import classify
from .solvers import SolveResult, solve_first_kind, solve_second_kind, solve_strong


@dataclass(frozen=True)
class Example:
    fixture: str
    expected: tuple  # best proximity points
    source: str  # "published" or "derived"
    notes: tuple = field(default=())


EXAMPLES = {
    "basha-ex1": Example("basha-ex1.json", ((2.0,),), "published"),
    "kannan-ex": Example("kannan-ex.json", ((6.0,),), "published"),
    "piecewise-Aprime": Example("piecewise-Aprime.json", ((3.0,),), "published"),
    "l1-second-type": Example("l1-second-type.json", ((4.0, 0.0),), "published"),
    "segment-union": Example(
        "segment-union.json",
        ((2.0, 0.0),),
        "derived",
        (
            "discrepancy: the originally stated best proximity point (4, 0) is not in G; "
            "a brute-force scan of G for d(u, Su) = 1 gives (2, 0)",
        ),
    ),
    "two-interval": Example(
        "two-interval.json",
        ((-0.5,), (0.5,)),
        "derived",
        (
            "discrepancy: G was originally stated as [-1, -1/2] U [1/2, -1]; [1/2, 1] is used",
            "no relation was stated; any f works since d(Su1, Su2) = 0, basha alpha=0.5 is used",
        ),
    ),
    "strong-ex": Example(
        "strong-ex.json",
        ((1.0,),),
        "published",
        ("the strong condition was stated with (gamma-1) d(A, B), A and B undefined; read as (gamma-1) dist(G, H)",),
    ),
}


def example_config(name: str, seed: int | None = None) -> RunConfig:
    if name not in EXAMPLES:
        raise UnknownExample(f"unknown example {name!r}; known: {', '.join(EXAMPLES)}")
    path = resources.files("proxipoint") / "fixtures" / EXAMPLES[name].fixture
    return instance_from_dict(json.loads(path.read_text()), seed)


def solve(cfg: RunConfig, scheme: str | None = None, pair: ProximalPair | None = None) -> SolveResult:
    inst = cfg.instance
    scheme = scheme or cfg.scheme
    pair = pair or compute_proximal_pair(inst)
    if scheme == "strong":
        result, _ = solve_strong(inst, cfg.p_max, pair)
        return result
    x0 = cfg.x0 if cfg.x0 is not None else as_point(pair.G0[0])
    if scheme == "second":
        return solve_second_kind(inst, x0, cfg.max_iter, pair)
    return solve_first_kind(inst, x0, cfg.max_iter, pair)


def base_report(cfg: RunConfig) -> dict:
    inst = cfg.instance
    return {
        "tool": "proxipoint",
        "version": __version__,
        "seed": inst.seed,
        "instance": instance_to_dict(inst, scheme=cfg.scheme, x0=cfg.x0, max_iter=cfg.max_iter, p_max=cfg.p_max),
    }


def _matches(result: SolveResult, ex: Example, tol: float) -> bool:
    def close(p, q):
        return max(abs(a - b) for a, b in zip(p, q)) <= tol

    if not any(close(result.point, e) for e in ex.expected):
        return False
    if result.residual > tol:
        return False
    if len(ex.expected) > 1:
        pts = result.unique.points
        return (
            result.unique.status == "multiple"
            and len(pts) == len(ex.expected)
            and all(any(close(p, e) for p in pts) for e in ex.expected)
        )
    return result.unique.status == "unique"


def run_example(name: str, seed: int | None = None, n_quadruples: int = 10_000) -> dict:
    """classify -> certify -> solve -> uniqueness, compared with the expected point(s)."""
    cfg = example_config(name, seed)
    ex = EXAMPLES[name]
    inst = cfg.instance
    rep = base_report(cfg)
    rep["example"] = name
    pair = compute_proximal_pair(inst)
    rep["distance"] = pair.to_json()
    rep["class_report"] = classify(inst.f, seed=inst.seed).to_json()
    rep["cert_report"] = certify_contraction(inst, pair, n_quadruples).to_json()
    result = solve(cfg, pair=pair)
    rep["solve"] = result.to_json()
    rep["expected"] = {"points": [list(p) for p in ex.expected], "source": ex.source}
    rep["match"] = _matches(result, ex, inst.tolerances.tol_residual)
    rep["fixture_notes"] = list(ex.notes)
    return rep
