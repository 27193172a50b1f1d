"""Command line entry point ``proxipoint``.

Exit codes: 0 success, 1 other failure (including a run-example mismatch),
2 a theorem hypothesis fails on the instance, 3 the certifier or class
check found a violation, 4 usage or schema error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

from . import __version__
from .config import load_config
from .dsl import parse_relation
from .engine import certify_contraction, compute_proximal_pair
from .errors import (
    ArityError,
    HypothesisFailure,
    MapSyntaxError,
    ParamOutOfRange,
    ProxipointError,
    SchemaError,
    StartNotProximal,
    UnknownExample,
    UnknownName,
    UnknownVariable,
)
from .metric import distance_between_regions
from .registry import EXAMPLES, base_report, run_example, solve
from .relations import DEFAULT_N_SAMPLES, DEFAULT_R_DOM, classify
from .report import dumps, emit_trace

log = logging.getLogger("proxipoint")

EXIT_OK, EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2, 3, 4
_USAGE_ERRORS = (SchemaError, MapSyntaxError, ArityError, UnknownVariable, UnknownName, ParamOutOfRange,
                 UnknownExample, StartNotProximal)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="proxipoint", description="Best proximity points of non-self maps.")
    p.add_argument("--version", action="version", version=f"proxipoint {__version__}")
    p.add_argument("--timing", action="store_true", help="add wall time to the report (breaks byte equality)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="compute a best proximity point")
    s.add_argument("-c", "--config", required=True)
    s.add_argument("--scheme", choices=["first", "second", "strong"])
    s.add_argument("--seed", type=_seed)
    s.add_argument("--trace", help="trace output path (overrides output.trace_path)")
    s.add_argument("--format", choices=["csv", "json"])

    c = sub.add_parser("certify", help="falsify the contraction inequality on sampled quadruples")
    c.add_argument("-c", "--config", required=True)
    c.add_argument("--quadruples", type=int, default=10_000)
    c.add_argument("--seed", type=_seed)

    r = sub.add_parser("classify-relation", help="check membership of f in class A or A'")
    r.add_argument("-e", "--expr", required=True)
    r.add_argument("--class", dest="cls", choices=["A", "Aprime"], required=True)
    r.add_argument("--samples", type=int, default=DEFAULT_N_SAMPLES)
    r.add_argument("--r-dom", type=float, default=DEFAULT_R_DOM)
    r.add_argument("--seed", type=_seed, default=0xBA5E)

    d = sub.add_parser("distance", help="dist(G, H) with witnesses and the proximal sets")
    d.add_argument("-c", "--config", required=True)
    d.add_argument("--grid", action="store_true", help="also run the grid-refinement route")

    e = sub.add_parser("run-example", help="run a worked example end to end")
    e.add_argument("name")
    e.add_argument("--seed", type=_seed)
    e.add_argument("--quadruples", type=int, default=10_000)

    sub.add_parser("list-examples", help="list the example registry")
    return p


def _cmd_solve(args) -> tuple[dict, int]:
    cfg = load_config(args.config, args.seed)
    rep = base_report(cfg)
    pair = compute_proximal_pair(cfg.instance)
    rep["distance"] = pair.to_json()
    result = solve(cfg, args.scheme, pair)
    rep["solve"] = result.to_json()
    path = args.trace or cfg.trace_path
    if path:
        emit_trace(result.trace, args.format or cfg.trace_format, path, cfg.instance.metric.dim)
        rep["trace_path"] = path
    return rep, EXIT_OK


def _cmd_certify(args) -> tuple[dict, int]:
    cfg = load_config(args.config, args.seed)
    rep = base_report(cfg)
    cert = certify_contraction(cfg.instance, n_quadruples=args.quadruples)
    rep["cert_report"] = cert.to_json()
    return rep, EXIT_VIOLATION if cert.violated else EXIT_OK


def _cmd_classify(args) -> tuple[dict, int]:
    f = parse_relation(args.expr, args.cls)
    report = classify(f, R_dom=args.r_dom, n_samples=args.samples, seed=args.seed)
    rep = {"tool": "proxipoint", "version": __version__, "seed": args.seed, "relation": f.to_text(),
           "class_report": report.to_json()}
    return rep, EXIT_OK if report.passed else EXIT_VIOLATION


def _cmd_distance(args) -> tuple[dict, int]:
    cfg = load_config(args.config)
    inst = cfg.instance
    rep = base_report(cfg)
    rep["distance"] = compute_proximal_pair(inst).to_json()
    if args.grid:
        rep["grid_distance"] = distance_between_regions(inst.G, inst.H, inst.metric, inst.refine_steps,
                                                        method="grid").to_json()
    return rep, EXIT_OK


def _cmd_run_example(args) -> tuple[dict, int]:
    rep = run_example(args.name, args.seed, args.quadruples)
    return rep, EXIT_OK if rep["match"] else EXIT_FAIL


def _cmd_list(args) -> tuple[dict, int]:
    return {name: {"fixture": ex.fixture, "expected": [list(p) for p in ex.expected], "source": ex.source}
            for name, ex in EXAMPLES.items()}, EXIT_OK


COMMANDS = {
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "classify-relation": _cmd_classify,
    "distance": _cmd_distance,
    "run-example": _cmd_run_example,
    "list-examples": _cmd_list,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    start = time.perf_counter()
    try:
        rep, code = COMMANDS[args.command](args)
    except HypothesisFailure as exc:
        print(f"hypothesis failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except _USAGE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProxipointError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.timing:
        rep["wall_time_s"] = time.perf_counter() - start
    sys.stdout.write(dumps(rep))
    return code


if __name__ == "__main__":
    sys.exit(main())
