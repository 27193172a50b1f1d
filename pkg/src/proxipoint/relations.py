"""Sampling falsifiers for the implicit-relation classes A and A', and the catalog.

Class A asks for k < 1 with ``r <= f(s, s, r)`` or ``r <= f(r, s, s)``
implying ``r <= k s``, and for alpha < 1 with ``f(r, 0, 0) <= alpha r``.
Class A' asks for k < 1 with ``r <= f(s, 0, r + s)`` implying
``r <= k s``, monotonicity in the third argument, and ``r <= f(r, r, r)``
only at r = 0.

Both checks are falsifiers: a ``pass`` verdict means no sample violated
the axioms, not that membership is proven.  Sample sets are nested in
``n_samples`` (dyadic grid plus a prefix-stable random stream), so the
reported suprema never decrease when more samples are requested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsl import RelationExpr, parse_relation
from .errors import EvalError, NumericError, ParamOutOfRange, UnknownName

DEFAULT_SEED = 0xBA5E
DEFAULT_R_DOM = 10.0
DEFAULT_N_SAMPLES = 100_000
DEFAULT_TOL = 1e-9
DEFAULT_MARGIN = 1e-6
MAX_WITNESSES = 10


@dataclass
class ClassReport:
    verdict: str  # pass | fail | inconclusive
    k_hat: float | None
    alpha_hat: float | None
    witnesses: list = field(default_factory=list)
    samples_checked: int = 0
    R_dom: float = DEFAULT_R_DOM
    declared_class: str = "A"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "class": self.declared_class,
            "k_hat": self.k_hat,
            "alpha_hat": self.alpha_hat,
            "witnesses": self.witnesses,
            "samples_checked": self.samples_checked,
            "R_dom": self.R_dom,
        }


def _samples(R_dom: float, n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(grid pairs, random quadruples); both nested in n_samples."""
    if n_samples < 1 or not R_dom > 0:
        raise ValueError("need n_samples >= 1 and R_dom > 0")
    half = max(1, n_samples // 2)
    level = max(1, int(math.floor(math.log2(math.sqrt(half)))))
    axis = R_dom * np.arange(2**level + 1) / 2**level
    r, s = np.meshgrid(axis, axis, indexing="ij")
    grid = np.stack([r.ravel(), s.ravel()], axis=1)
    rand = R_dom * np.random.default_rng(seed).random((n_samples - half if n_samples > 1 else 1, 4))
    return grid, rand


def _f(f: RelationExpr, r, s, t) -> np.ndarray:
    try:
        with np.errstate(all="raise"):
            out = np.broadcast_to(np.asarray(f(r, s, t), dtype=float), np.broadcast(r, s, t).shape)
    except (NumericError, FloatingPointError, ZeroDivisionError) as exc:
        raise EvalError(f"relation {f.to_text()!r} failed to evaluate: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise EvalError(f"relation {f.to_text()!r} produced a non-finite value")
    return out


def _leq(a, b, tol):
    # relative slack absorbs rounding in equality cases without inflating ratios at small scale
    return a <= b + tol * np.maximum(np.abs(a), np.abs(b))


def _ratio_check(r, s, hyp, tol, margin, label, witnesses):
    """k-estimate over samples where the hypothesis holds; collect violations."""
    zero_s = s <= tol
    bad_zero = hyp & zero_s & (r > tol)
    pos = hyp & ~zero_s
    ratios = np.where(pos, r / np.where(zero_s, 1.0, s), 0.0)
    k_hat = float(ratios.max()) if pos.any() else 0.0
    bad_ratio = pos & (ratios > 1 - margin)
    for idx in np.flatnonzero(bad_zero | bad_ratio)[:MAX_WITNESSES]:
        witnesses.append({"axiom": label, "r": float(r[idx]), "s": float(s[idx])})
    return k_hat


def _alpha(f, r, tol):
    pos = r > tol
    if not pos.any():
        return 0.0
    rr = r[pos]
    z = np.zeros_like(rr)
    return float(max(0.0, (_f(f, rr, z, z) / rr).max()))


def _verdict(witnesses, *constants, margin):
    if witnesses:
        return "fail"
    if any(c is not None and c > 1 - margin for c in constants):
        return "fail"
    return "pass"


def check_class_A(
    f: RelationExpr,
    R_dom: float = DEFAULT_R_DOM,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = DEFAULT_SEED,
    tol: float = DEFAULT_TOL,
    margin: float = DEFAULT_MARGIN,
) -> ClassReport:
    grid, rand = _samples(R_dom, n_samples, seed)
    r = np.concatenate([grid[:, 0], rand[:, 0]])
    s = np.concatenate([grid[:, 1], rand[:, 1]])
    hyp = _leq(r, _f(f, s, s, r), tol) | _leq(r, _f(f, r, s, s), tol)
    witnesses: list = []
    k_hat = _ratio_check(r, s, hyp, tol, margin, "A1", witnesses)
    alpha_hat = _alpha(f, r, tol)
    if alpha_hat > 1 - margin:
        pos = r > tol
        z = np.zeros(pos.sum())
        ratios = _f(f, r[pos], z, z) / r[pos]
        i = int(np.argmax(ratios))
        witnesses.append({"axiom": "A2", "r": float(r[pos][i]), "f(r,0,0)": float(ratios[i] * r[pos][i])})
    return ClassReport(
        _verdict(witnesses, k_hat, alpha_hat, margin=margin),
        k_hat if k_hat <= 1 else None,
        alpha_hat,
        witnesses,
        int(r.size),
        R_dom,
        "A",
    )


def check_class_Aprime(
    f: RelationExpr,
    R_dom: float = DEFAULT_R_DOM,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = DEFAULT_SEED,
    tol: float = DEFAULT_TOL,
    margin: float = DEFAULT_MARGIN,
) -> ClassReport:
    grid, rand = _samples(R_dom, n_samples, seed)
    r = np.concatenate([grid[:, 0], rand[:, 0]])
    s = np.concatenate([grid[:, 1], rand[:, 1]])
    zero = np.zeros_like(r)
    witnesses: list = []

    hyp1 = _leq(r, _f(f, s, zero, r + s), tol)
    k_hat = _ratio_check(r, s, hyp1, tol, margin, "A'1", witnesses)

    # monotone in the third argument: grid pairs and random rows, t <= t1
    mr, ms = r, s
    t_lo = np.concatenate([np.minimum(grid[:, 0], grid[:, 1]), np.minimum(rand[:, 2], rand[:, 3])])
    t_hi = np.concatenate([np.maximum(grid[:, 0], grid[:, 1]), np.maximum(rand[:, 2], rand[:, 3])])
    n_m = t_lo.size
    mono_bad = ~_leq(_f(f, mr, ms, t_lo), _f(f, mr, ms, t_hi), tol)
    for idx in np.flatnonzero(mono_bad)[:MAX_WITNESSES]:
        witnesses.append(
            {"axiom": "A'2", "r": float(mr[idx]), "s": float(ms[idx]), "t": float(t_lo[idx]), "t1": float(t_hi[idx])}
        )

    diag = np.concatenate([r, s])
    hyp3 = _leq(diag, _f(f, diag, diag, diag), tol) & (diag > tol)
    for idx in np.flatnonzero(hyp3)[:MAX_WITNESSES]:
        witnesses.append({"axiom": "A'3", "r": float(diag[idx])})

    return ClassReport(
        _verdict(witnesses, k_hat, margin=margin),
        k_hat if k_hat <= 1 else None,
        None,
        witnesses,
        int(r.size + n_m + diag.size),
        R_dom,
        "Aprime",
    )


def classify(f: RelationExpr, **kwargs) -> ClassReport:
    """Run the check matching the relation's declared class."""
    if f.declared_class == "Aprime":
        return check_class_Aprime(f, **kwargs)
    return check_class_A(f, **kwargs)


def alpha_estimate(f: RelationExpr, R_dom: float = DEFAULT_R_DOM, n_samples: int = DEFAULT_N_SAMPLES,
                   seed: int = DEFAULT_SEED, tol: float = DEFAULT_TOL) -> float:
    """sup f(r, 0, 0) / r over the same sample set the class-A check uses."""
    grid, rand = _samples(R_dom, n_samples, seed)
    return _alpha(f, np.concatenate([grid[:, 0], rand[:, 0]]), tol)


# ---------------------------------------------------------------------------
# catalog

def _unit(name, v, upper=1.0):
    if not (0.0 <= v < upper):
        raise ParamOutOfRange(f"{name}={v} outside [0, {upper})")


def _basha(p):
    _unit("alpha", p["alpha"])
    return f"{p['alpha']!r}*r"


def _kannan(p):
    _unit("alpha", p["alpha"], 0.5)
    return f"{p['alpha']!r}*(s+t)"


def _reich(p):
    a = [p["alpha1"], p["alpha2"], p["alpha3"]]
    for i, v in enumerate(a, 1):
        _unit(f"alpha{i}", v)
    if not sum(a) < 1:
        raise ParamOutOfRange(f"alpha1+alpha2+alpha3={sum(a)} must be < 1")
    return f"{a[0]!r}*r+{a[1]!r}*s+{a[2]!r}*t"


def _bianchini(p):
    _unit("alpha", p["alpha"])
    return f"{p['alpha']!r}*max(s,t)"


def _khan(p):
    _unit("alpha", p["alpha"])
    return f"{p['alpha']!r}*sqrt(s*t)"


def _max3(p):
    _unit("alpha", p["alpha"])
    return f"{p['alpha']!r}*max(r,s,t)"


CATALOG = {
    "basha": (_basha, ("alpha",)),
    "kannan": (_kannan, ("alpha",)),
    "reich": (_reich, ("alpha1", "alpha2", "alpha3")),
    "bianchini": (_bianchini, ("alpha",)),
    "khan": (_khan, ("alpha",)),
    # used by the worked examples
    "max3": (_max3, ("alpha",)),
}


def catalog_relation(name: str, params: dict, declared_class: str = "A") -> RelationExpr:
    try:
        build, keys = CATALOG[name]
    except KeyError:
        raise UnknownName(f"unknown relation {name!r}; known: {', '.join(CATALOG)}") from None
    missing = set(keys) - set(params)
    extra = set(params) - set(keys)
    if missing or extra:
        raise ParamOutOfRange(f"{name} expects parameters {keys}, got {sorted(params)}")
    params = {k: float(v) for k, v in params.items()}
    return parse_relation(build(params), declared_class, params)
