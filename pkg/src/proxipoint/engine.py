"""Proximal pairs, the proximal step, and the contraction certifier."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsl import MappingSpec, RelationExpr, eval_map, eval_map_batch
from .errors import (
    DimensionMismatch,
    EmptyProximalSet,
    NoFeasiblePoint,
    OutsideRegion,
    SchemaError,
)
from .metric import (
    DEFAULT_REFINE_STEPS,
    DEFAULT_START_RESOLUTION,
    Box,
    DistanceCertificate,
    Metric,
    Point,
    as_point,
    distance_between_regions,
    nearest_sets,
    region_distance,
    region_sample,
)
from .relations import DEFAULT_SEED

CONTRACTION_TYPES = ("first", "second", "strong")
GAMMA_STEPS = 32
MAX_U_PER_X = 64
MAX_CERT_WITNESSES = 10


@dataclass(frozen=True)
class Tolerances:
    tol_feas: float = 1e-9
    tol_residual: float = 1e-6
    tol_cert: float = 1e-9
    tol_step: float = 1e-9

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("tol_feas", "tol_residual", "tol_cert", "tol_step")}


@dataclass(frozen=True)
class ProximalInstance:
    metric: Metric
    G: object
    H: object
    S: MappingSpec
    f: RelationExpr
    contraction_type: str = "first"
    tolerances: Tolerances = field(default_factory=Tolerances)
    resolution: float = DEFAULT_START_RESOLUTION
    refine_steps: int = DEFAULT_REFINE_STEPS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        n = self.metric.dim
        if self.G.dim != n or self.H.dim != n:
            raise DimensionMismatch(f"metric dimension {n}, G dimension {self.G.dim}, H dimension {self.H.dim}")
        if self.S.arity != n or self.S.out_dim != n:
            raise SchemaError("map", f"map is {self.S.arity}->{self.S.out_dim} dimensional, metric is {n}-dimensional")
        if self.contraction_type not in CONTRACTION_TYPES:
            raise SchemaError("contraction_type", f"must be one of {CONTRACTION_TYPES}")
        X = self.sample_G()
        miss = region_distance(self.H, self.S_batch(X), self.metric) > self.tolerances.tol_feas
        if miss.any():
            bad = as_point(X[np.argmax(miss)])
            raise SchemaError("map", f"S does not map G into H, e.g. at {bad}")

    @property
    def declared_class(self) -> str:
        return self.f.declared_class

    def S_point(self, p) -> Point:
        return eval_map(self.S, p)

    def S_batch(self, pts) -> np.ndarray:
        return eval_map_batch(self.S, pts)

    def sample_G(self, resolution: float | None = None, window=None) -> np.ndarray:
        return region_sample(self.G, resolution or self.resolution, metric=self.metric, window=window)

    def d(self, p, q) -> float:
        return self.metric(p, q)


@dataclass
class ProximalPair:
    dist: float
    G0: np.ndarray
    H0: np.ndarray
    resolution: float
    certificate: DistanceCertificate

    def to_json(self) -> dict:
        return {
            "dist": self.dist,
            "certificate": self.certificate.to_json(),
            "resolution": self.resolution,
            "G0_size": int(self.G0.shape[0]),
            "H0_size": int(self.H0.shape[0]),
            "G0_extent": _extent(self.G0),
            "H0_extent": _extent(self.H0),
        }


def _extent(pts: np.ndarray) -> list:
    return [list(map(float, pts.min(axis=0))), list(map(float, pts.max(axis=0)))]


def _proximal_subset(instance, A, B, dist, witness, res0) -> tuple[np.ndarray, float]:
    """Samples of A at distance dist from B; refined near the witness if none."""
    tol = instance.tolerances.tol_feas
    res = res0
    pts = region_sample(A, res, metric=instance.metric)
    for _ in range(instance.refine_steps + 1):
        keep = np.abs(region_distance(B, pts, instance.metric) - dist) <= tol
        if keep.any():
            return pts[keep], res
        res /= 2
        w = np.asarray(witness)
        pts = region_sample(A, res, metric=instance.metric, window=(w - 2 * res, w + 2 * res))
    raise EmptyProximalSet("no point of the set realizes dist(G, H) at the resolution floor")


def compute_proximal_pair(instance: ProximalInstance) -> ProximalPair:
    cert = distance_between_regions(instance.G, instance.H, instance.metric, instance.refine_steps)
    G0, res_g = _proximal_subset(instance, instance.G, instance.H, cert.value, cert.witness_g, instance.resolution)
    H0, res_h = _proximal_subset(instance, instance.H, instance.G, cert.value, cert.witness_h, instance.resolution)
    return ProximalPair(cert.value, G0, H0, min(res_g, res_h), cert)


def in_G0(instance: ProximalInstance, pair: ProximalPair, p) -> bool:
    tol = instance.tolerances.tol_feas
    p = np.atleast_2d(np.asarray(p, dtype=float))
    on_g = region_distance(instance.G, p, instance.metric)[0] <= tol
    return bool(on_g and abs(region_distance(instance.H, p, instance.metric)[0] - pair.dist) <= tol)


def in_H0(instance: ProximalInstance, pair: ProximalPair, q) -> bool:
    tol = instance.tolerances.tol_feas
    q = np.atleast_2d(np.asarray(q, dtype=float))
    on_h = region_distance(instance.H, q, instance.metric)[0] <= tol
    return bool(on_h and abs(region_distance(instance.G, q, instance.metric)[0] - pair.dist) <= tol)


def residuals(instance: ProximalInstance, pair: ProximalPair, pts) -> np.ndarray:
    """|d(x, Sx) - dist(G, H)| for each row."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return np.abs(instance.metric.dist(pts, instance.S_batch(pts)) - pair.dist)


def proximal_step(instance: ProximalInstance, pair: ProximalPair, y, prev=None) -> Point:
    """A point u of G with d(u, y) = dist(G, H).

    Such u are exactly the nearest points of G to y when y lies in H0, so
    the candidates are the exact nearest sets of the atoms of G.  Ties go
    to the smaller deviation, then to the candidate closest to ``prev``,
    then to the lexicographically smallest coordinates.
    """
    tol = instance.tolerances.tol_feas
    y = np.asarray(as_point(y))
    if region_distance(instance.H, y[None, :], instance.metric)[0] > tol:
        raise OutsideRegion(f"{tuple(y)} is not in H")
    dmin, boxes = nearest_sets(instance.G, y, instance.metric)
    if abs(dmin - pair.dist) > tol:
        raise NoFeasiblePoint(
            f"no u in G with d(u, {tuple(map(float, y))}) = {pair.dist}: nearest point of G is at {dmin}"
        )
    prev_arr = None if prev is None else np.asarray(as_point(prev))
    best = None
    for lo, hi in boxes:
        c = lo if prev_arr is None else np.clip(prev_arr, lo, hi)
        c = as_point(c)
        key = (
            abs(instance.d(c, y) - pair.dist),
            0.0 if prev_arr is None else instance.d(c, prev_arr),
            c,
        )
        if best is None or key < best:
            best = key
    return best[2]


# ---------------------------------------------------------------------------
# certifier


@dataclass
class CertReport:
    verdict: str  # no_violation | violated
    witnesses: list
    quadruples_checked: int
    contraction_type: str
    declared_class: str
    feasible_x: int = 0
    sampled_x: int = 0
    rows: int = 0
    capped_x: int = 0
    max_ratio: float | None = None

    @property
    def violated(self) -> bool:
        return self.verdict == "violated"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "witnesses": self.witnesses,
            "quadruples_checked": self.quadruples_checked,
            "contraction_type": self.contraction_type,
            "class": self.declared_class,
            "feasible_x": self.feasible_x,
            "sampled_x": self.sampled_x,
            "rows": self.rows,
            "capped_x": self.capped_x,
            "max_ratio": self.max_ratio,
        }


def _cap(pts: np.ndarray) -> tuple[np.ndarray, bool]:
    if pts.shape[0] <= MAX_U_PER_X:
        return pts, False
    idx = np.unique(np.linspace(0, pts.shape[0] - 1, MAX_U_PER_X).round().astype(int))
    return pts[idx], True


def _proximal_rows(instance, pair, X, SX):
    """(x index, u) rows with d(u, Sx) = dist, u enumerated from exact nearest sets."""
    tol = instance.tolerances.tol_feas
    xs, us, capped = [], [], 0
    for i, y in enumerate(SX):
        dmin, boxes = nearest_sets(instance.G, y, instance.metric)
        if abs(dmin - pair.dist) > tol:
            continue
        pts = []
        for lo, hi in boxes:
            if np.array_equal(lo, hi):
                pts.append(lo[None, :])
            else:
                pts.append(region_sample(Box(tuple(lo), tuple(hi)), instance.resolution, metric=instance.metric))
        pts = np.unique(np.concatenate(pts), axis=0)
        pts, was_capped = _cap(pts)
        capped += was_capped
        xs.extend([i] * pts.shape[0])
        us.append(pts)
    if not us:
        return np.zeros(0, dtype=int), np.zeros((0, X.shape[1])), 0
    return np.asarray(xs), np.concatenate(us), capped


def _relaxed_rows(instance, X, SX, D, bound):
    """Rows (x index, u) with u a grid point of G and d(u, Sx) <= bound."""
    xs, us, capped = [], [], 0
    for i in range(X.shape[0]):
        ok = np.flatnonzero(D[:, i] <= bound + instance.tolerances.tol_feas)
        if ok.size == 0:
            continue
        pts, was_capped = _cap(X[ok])
        capped += was_capped
        xs.extend([i] * pts.shape[0])
        us.append(pts)
    if not us:
        return np.zeros(0, dtype=int), np.zeros((0, X.shape[1])), 0
    return np.asarray(xs), np.concatenate(us), capped


def _evaluate(instance, X, SX, xs, us, pairs, slack_add):
    m = instance.metric
    f = instance.f
    i1, i2 = pairs[:, 0], pairs[:, 1]
    x1, x2 = X[xs[i1]], X[xs[i2]]
    u1, u2 = us[i1], us[i2]
    if instance.contraction_type == "second":
        a1, a2 = SX[xs[i1]], SX[xs[i2]]
        b1, b2 = instance.S_batch(u1), instance.S_batch(u2)
    else:
        a1, a2, b1, b2 = x1, x2, u1, u2
    lhs = m.dist(b1, b2)
    if instance.declared_class == "A":
        rhs = f(m.dist(a1, a2), m.dist(b1, a1), m.dist(b2, a2))
    else:
        rhs = f(m.dist(a1, a2), m.dist(b1, a2), m.dist(b2, a1))
    rhs = np.broadcast_to(np.asarray(rhs, dtype=float), lhs.shape) + slack_add
    return (x1, x2, u1, u2), lhs, rhs


def certify_contraction(
    instance: ProximalInstance,
    pair: ProximalPair | None = None,
    n_quadruples: int = 10_000,
    seed: int | None = None,
) -> CertReport:
    """Falsify the contraction inequality of the instance's type and class.

    Quadruples (x1, u1, x2, u2) are drawn from a prefix-stable random
    stream, so a witness found with n quadruples is found again with any
    larger n.  For the strong type the inequality is checked for each of
    32 values of gamma evenly spaced in [1, 2).
    """
    pair = pair or compute_proximal_pair(instance)
    seed = instance.seed if seed is None else seed
    tol = instance.tolerances.tol_cert
    X = instance.sample_G()
    SX = instance.S_batch(X)

    if instance.contraction_type == "strong":
        D = instance.metric.dist(X[:, None, :], SX[None, :, :])
        gammas = [1 + j / GAMMA_STEPS for j in range(GAMMA_STEPS)]
        batches = []
        for g in gammas:
            xs, us, capped = _relaxed_rows(instance, X, SX, D, g * pair.dist)
            batches.append((g, xs, us, capped, (g - 1) * pair.dist))
    else:
        xs, us, capped = _proximal_rows(instance, pair, X, SX)
        batches = [(None, xs, us, capped, 0.0)]

    if all(b[1].size == 0 for b in batches):
        raise EmptyProximalSet("no x in the G grid has S x in H0; the certifier has nothing to check")

    witnesses: list = []
    checked = 0
    max_ratio = 0.0
    feasible = set()
    rows = 0
    capped_total = 0
    for bi, (g, xs, us, capped, add) in enumerate(batches):
        if xs.size == 0:
            continue
        feasible.update(xs.tolist())
        rows += xs.size
        capped_total = max(capped_total, capped)
        pairs = np.random.default_rng([seed, bi]).integers(0, xs.size, size=(n_quadruples, 2))
        (x1, x2, u1, u2), lhs, rhs = _evaluate(instance, X, SX, xs, us, pairs, add)
        checked += n_quadruples
        excess = lhs - rhs
        pos = rhs > 0
        if pos.any():
            max_ratio = max(max_ratio, float((lhs[pos] / rhs[pos]).max()))
        for k in np.flatnonzero(excess > tol):
            if len(witnesses) >= MAX_CERT_WITNESSES:
                break
            witnesses.append(
                {
                    "x1": as_point(x1[k]),
                    "x2": as_point(x2[k]),
                    "u1": as_point(u1[k]),
                    "u2": as_point(u2[k]),
                    "gamma": g,
                    "lhs": float(lhs[k]),
                    "rhs": float(rhs[k]),
                }
            )
    return CertReport(
        "violated" if witnesses else "no_violation",
        witnesses,
        checked,
        instance.contraction_type,
        instance.declared_class,
        feasible_x=len(feasible),
        sampled_x=int(X.shape[0]),
        rows=rows,
        capped_x=capped_total,
        max_ratio=max_ratio,
    )
