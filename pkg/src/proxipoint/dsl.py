"""A small expression language for piecewise maps S and relations f(r, s, t).

Grammar::

    map      := piece (";" piece)* | exprlist
    piece    := "piece" guard ":" exprlist
    guard    := var "in" "[" num "," num "]" ("and" guard)?
    exprlist := expr ("," expr)* | "(" expr ("," expr)+ ")"
    expr     := term (("+"|"-") term)*
    term     := factor (("*"|"/") factor)*
    factor   := num | var | "(" expr ")" | "-" factor | func "(" expr ("," expr)* ")"

Expression trees are evaluated by a single left-to-right interpreter that
accepts either Python floats or numpy arrays, so batch and scalar
evaluation perform the same floating-point operations in the same order.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ArityError, GuardMiss, MapSyntaxError, NumericError, UnknownVariable

MAP_VARS = ("x", "y")
RELATION_VARS = ("r", "s", "t")
FUNCS = {"max": (2, None), "min": (2, None), "sqrt": (1, 1), "abs": (1, 1)}
KEYWORDS = {"piece", "in", "and"}


# ---------------------------------------------------------------------------
# tree


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_text(node) -> str:
    """Canonical text; parsing it back yields an equal tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if isinstance(node.arg, BinOp):
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, Call):
        return f"{node.func}({','.join(to_text(a) for a in node.args)})"
    p = _PREC[node.op]
    left = to_text(node.left)
    if isinstance(node.left, BinOp) and _PREC[node.left.op] < p:
        left = f"({left})"
    right = to_text(node.right)
    if isinstance(node.right, BinOp) and _PREC[node.right.op] <= p:
        right = f"({right})"
    return f"{left}{node.op}{right}"


def variables(node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return variables(node.arg)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        return set().union(*(variables(a) for a in node.args))
    return set()


def evaluate(node, env: dict):
    """Interpret the tree; values in env may be floats or numpy arrays."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, BinOp):
        a = evaluate(node.left, env)
        b = evaluate(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise NumericError("division by zero")
        return a / b
    args = [evaluate(a, env) for a in node.args]
    if node.func == "max":
        out = args[0]
        for a in args[1:]:
            out = np.maximum(out, a)
        return out
    if node.func == "min":
        out = args[0]
        for a in args[1:]:
            out = np.minimum(out, a)
        return out
    if node.func == "abs":
        return np.abs(args[0])
    if np.any(np.asarray(args[0]) < 0):
        raise NumericError("sqrt of a negative number")
    return np.sqrt(args[0])


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/(),;:\[\]]))"
)


@dataclass
class _Tok:
    kind: str  # num | name | op | end
    text: str
    pos: int


def tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise MapSyntaxError(pos, "a number, name or operator", text)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, allowed_vars: tuple[str, ...]):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.allowed = allowed_vars

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, expected: str):
        raise MapSyntaxError(self.tok.pos, expected, self.text)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "name") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.error(repr(text))

    def number(self) -> float:
        neg = self.accept("-")
        if self.tok.kind != "num":
            self.error("a number")
        v = float(self.tok.text)
        self.i += 1
        return -v if neg else v

    def var(self) -> str:
        if self.tok.kind != "name" or self.tok.text in FUNCS or self.tok.text in KEYWORDS:
            self.error("a variable")
        name = self.tok.text
        if name not in self.allowed:
            raise UnknownVariable(f"unknown variable {name!r} at position {self.tok.pos}")
        self.i += 1
        return name

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if self.accept("-"):
            return Neg(self.factor())
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name" and tok.text in FUNCS:
            self.i += 1
            self.expect("(")
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            lo, hi = FUNCS[tok.text]
            if len(args) < lo or (hi is not None and len(args) > hi):
                raise ArityError(f"{tok.text} takes {lo}{'+' if hi is None else ''} argument(s), got {len(args)}")
            return Call(tok.text, tuple(args))
        if tok.kind == "name" and tok.text not in KEYWORDS:
            return Var(self.var())
        self.error("an expression")

    def exprlist(self) -> tuple:
        # a parenthesized tuple "(e1, e2, ...)" is tried first, with backtracking
        if self.tok.text == "(":
            save = self.i
            self.i += 1
            try:
                items = [self.expr()]
                while self.accept(","):
                    items.append(self.expr())
                if len(items) > 1 and self.accept(")") and self.tok.text in ("", ";"):
                    return tuple(items)
            except MapSyntaxError:
                pass
            self.i = save
        items = [self.expr()]
        while self.accept(","):
            items.append(self.expr())
        return tuple(items)

    def guard(self) -> tuple:
        conds = []
        while True:
            name = self.var()
            self.expect("in")
            self.expect("[")
            lo = self.number()
            self.expect(",")
            hi = self.number()
            self.expect("]")
            if lo > hi:
                raise MapSyntaxError(self.tok.pos, "a nonempty guard interval", self.text)
            conds.append((name, lo, hi))
            if not self.accept("and"):
                return tuple(conds)

    def finish(self):
        if self.tok.kind != "end":
            self.error("end of input")


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class Piece:
    guard: tuple  # ((var, lo, hi), ...); empty means "everywhere"
    body: tuple  # one tree per output coordinate


@dataclass(frozen=True)
class MappingSpec:
    arity: int
    pieces: tuple[Piece, ...]
    text: str = field(default="", compare=False)

    @property
    def out_dim(self) -> int:
        return len(self.pieces[0].body)

    def __call__(self, p):
        return eval_map(self, p)

    def to_text(self) -> str:
        out = []
        for pc in self.pieces:
            body = ", ".join(to_text(b) for b in pc.body)
            if len(pc.body) > 1:
                body = f"({body})"
            if not pc.guard:
                return body
            g = " and ".join(f"{v} in [{lo!r}, {hi!r}]" for v, lo, hi in pc.guard)
            out.append(f"piece {g}: {body}")
        return "; ".join(out)


def parse_map(text: str, arity: int | None = None) -> MappingSpec:
    """Parse a (piecewise) map over x or (x, y).

    The arity is inferred from the variables used unless given.
    """
    p = _Parser(text, MAP_VARS)
    pieces = []
    if p.tok.kind == "name" and p.tok.text == "piece":
        while True:
            p.expect("piece")
            g = p.guard()
            p.expect(":")
            pieces.append(Piece(g, p.exprlist()))
            if not p.accept(";"):
                break
    else:
        pieces.append(Piece((), p.exprlist()))
    p.finish()

    outs = {len(pc.body) for pc in pieces}
    if len(outs) != 1:
        raise ArityError("pieces disagree on the number of output coordinates")
    used = set()
    for pc in pieces:
        used |= {v for v, _, _ in pc.guard}
        for b in pc.body:
            used |= variables(b)
    inferred = 2 if "y" in used else 1
    if arity is None:
        arity = inferred
    elif arity not in (1, 2) or inferred > arity:
        raise ArityError(f"map uses {sorted(used)} but arity is {arity}")
    return MappingSpec(arity, tuple(pieces), text)


def _env(spec: MappingSpec, coords) -> dict:
    env = {"x": coords[0]}
    if spec.arity == 2:
        env["y"] = coords[1]
    return env


def eval_map(spec: MappingSpec, p) -> tuple[float, ...]:
    coords = tuple(float(c) for c in np.atleast_1d(p))
    if len(coords) != spec.arity:
        raise ArityError(f"map of arity {spec.arity} applied to a point of dimension {len(coords)}")
    env = _env(spec, coords)
    for pc in spec.pieces:
        if all(lo <= env[v] <= hi for v, lo, hi in pc.guard):
            out = tuple(float(evaluate(b, env)) for b in pc.body)
            if not all(math.isfinite(c) for c in out):
                raise NumericError(f"non-finite value at {coords}")
            return out
    raise GuardMiss(f"{coords} satisfies no guard")


def eval_map_batch(spec: MappingSpec, pts: np.ndarray) -> np.ndarray:
    """Evaluate on the rows of pts; same piece-selection rule as eval_map."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != spec.arity:
        raise ArityError(f"map of arity {spec.arity} applied to points of dimension {pts.shape[1]}")
    out = np.full((pts.shape[0], spec.out_dim), np.nan)
    todo = np.ones(pts.shape[0], dtype=bool)
    for pc in spec.pieces:
        mask = todo.copy()
        for v, lo, hi in pc.guard:
            col = pts[:, MAP_VARS.index(v)]
            mask &= (lo <= col) & (col <= hi)
        if mask.any():
            env = _env(spec, pts[mask].T)
            for k, b in enumerate(pc.body):
                out[mask, k] = evaluate(b, env)
            todo &= ~mask
    if todo.any():
        raise GuardMiss(f"{int(todo.sum())} point(s) satisfy no guard, e.g. {tuple(pts[todo][0])}")
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite map value")
    return out


# ---------------------------------------------------------------------------
# relations


@dataclass(frozen=True)
class RelationExpr:
    body: object
    declared_class: str = "A"
    params: tuple = ()
    text: str = field(default="", compare=False)

    def __post_init__(self):
        if self.declared_class not in ("A", "Aprime"):
            raise ValueError(f"declared_class must be 'A' or 'Aprime', not {self.declared_class!r}")

    def __call__(self, r, s, t):
        return evaluate(self.body, {"r": r, "s": s, "t": t})

    def to_text(self) -> str:
        return to_text(self.body)


def parse_relation(text: str, declared_class: str = "A", params: dict | None = None) -> RelationExpr:
    p = _Parser(text, RELATION_VARS)
    body = p.expr()
    p.finish()
    return RelationExpr(body, declared_class, tuple(sorted((params or {}).items())), text)
