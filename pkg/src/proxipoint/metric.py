"""Points, L1/L2/Linf metrics and the closed region catalog.

Every region in the catalog (interval, box, axis-aligned segment, finite
set, union) decomposes into a list of possibly degenerate, possibly
unbounded axis-aligned boxes.  Projection and set-to-set distance are
computed exactly on those boxes by coordinate clamping; sampling is only
needed for the grid-refinement distance and for the scans done by the
engine and solvers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyAfterTruncation

Point = tuple[float, ...]

METRIC_KINDS = ("L1", "L2", "Linf")
DEFAULT_TRUNC_RADIUS = 100.0
DEFAULT_MEMBERSHIP_TOL = 1e-9
DEFAULT_START_RESOLUTION = 2.0**-4
DEFAULT_REFINE_STEPS = 20

# relative slack used when comparing distances of competing atoms
_TIE_RTOL = 1e-12


def as_point(p: Iterable[float]) -> Point:
    pt = tuple(float(c) for c in np.atleast_1d(np.asarray(p, dtype=float)))
    if not all(math.isfinite(c) for c in pt):
        raise ValueError(f"point has non-finite coordinates: {pt}")
    return pt


@dataclass(frozen=True)
class Metric:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    def __call__(self, p, q) -> float:
        return metric_eval(self, p, q)

    def dist(self, a, b) -> np.ndarray:
        """Vectorized distance along the last axis (broadcasting)."""
        diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        if diff.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected dimension {self.dim}, got {diff.shape[-1]}")
        return _norm(self.kind, diff)


def _norm(kind: str, diff: np.ndarray) -> np.ndarray:
    if kind == "L1":
        return diff.sum(axis=-1)
    if kind == "L2":
        return np.sqrt((diff * diff).sum(axis=-1))
    return diff.max(axis=-1)


def metric_eval(metric: Metric, p, q) -> float:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if p.shape != (metric.dim,) or q.shape != (metric.dim,):
        raise DimensionMismatch(
            f"metric of dimension {metric.dim} applied to points of shape {p.shape}, {q.shape}"
        )
    return float(_norm(metric.kind, np.abs(p - q)))


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box; ends may be infinite, sides may be degenerate."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    trunc_radius: float = DEFAULT_TRUNC_RADIUS

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("box bounds must be nonempty and of equal length")
        for a, b in zip(self.lo, self.hi):
            if math.isnan(a) or math.isnan(b):
                raise ValueError("NaN bound")
            if a > b:
                raise ValueError(f"empty side [{a}, {b}]")
            if a == math.inf or b == -math.inf:
                raise ValueError(f"side [{a}, {b}] contains no real number")
        if not self.trunc_radius > 0:
            raise ValueError("trunc_radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def atoms(self) -> list[Box]:
        return [self]

    def to_json(self) -> dict:
        return {"shape": "box", "intervals": [[_enc(a), _enc(b)] for a, b in zip(self.lo, self.hi)]}


def Interval(lo: float = -math.inf, hi: float = math.inf, trunc_radius: float = DEFAULT_TRUNC_RADIUS) -> Box:
    return _Interval((float(lo),), (float(hi),), trunc_radius)


class _Interval(Box):
    def to_json(self) -> dict:
        return {"shape": "interval", "lo": _enc(self.lo[0]), "hi": _enc(self.hi[0])}

    def __repr__(self):
        return f"Interval({self.lo[0]}, {self.hi[0]})"


def Segment(start: Sequence[float], end: Sequence[float], trunc_radius: float = DEFAULT_TRUNC_RADIUS) -> Box:
    """Axis-aligned segment between two finite endpoints."""
    a = as_point(start)
    b = as_point(end)
    if len(a) != len(b):
        raise DimensionMismatch("segment endpoints differ in dimension")
    if sum(x != y for x, y in zip(a, b)) > 1:
        raise ValueError("segment must be axis-aligned")
    lo = tuple(min(x, y) for x, y in zip(a, b))
    hi = tuple(max(x, y) for x, y in zip(a, b))
    return _Segment(lo, hi, trunc_radius)


class _Segment(Box):
    def to_json(self) -> dict:
        return {"shape": "segment", "start": list(self.lo), "end": list(self.hi)}


@dataclass(frozen=True)
class FiniteSet:
    points: tuple[Point, ...]
    trunc_radius: float = DEFAULT_TRUNC_RADIUS

    def __post_init__(self):
        if not self.points:
            raise ValueError("finite set must be nonempty")
        pts = tuple(as_point(p) for p in self.points)
        if len({len(p) for p in pts}) != 1:
            raise DimensionMismatch("finite set points differ in dimension")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def atoms(self) -> list[Box]:
        return [Box(p, p, self.trunc_radius) for p in self.points]

    def to_json(self) -> dict:
        return {"shape": "finite", "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class Union:
    parts: tuple
    trunc_radius: float = DEFAULT_TRUNC_RADIUS

    def __post_init__(self):
        if not self.parts:
            raise ValueError("union must have at least one part")
        object.__setattr__(self, "parts", tuple(self.parts))
        if len({p.dim for p in self.parts}) != 1:
            raise DimensionMismatch("union parts differ in dimension")

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def atoms(self) -> list[Box]:
        return [a for part in self.parts for a in part.atoms()]

    def to_json(self) -> dict:
        return {"shape": "union", "parts": [p.to_json() for p in self.parts]}


Region = Box | FiniteSet | Union


def _enc(v: float):
    return None if math.isinf(v) else v


def _check_dim(region, p) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.shape[-1] != region.dim:
        raise DimensionMismatch(f"region of dimension {region.dim}, point of dimension {arr.shape[-1]}")
    return arr


def _atom_nearest(atom: Box, p: np.ndarray, metric: Metric) -> tuple[float, np.ndarray, np.ndarray]:
    """Distance from p to the atom and the box of all atom points attaining it."""
    lo = np.asarray(atom.lo)
    hi = np.asarray(atom.hi)
    c = np.clip(p, lo, hi)
    d = float(_norm(metric.kind, np.abs(p - c)))
    if metric.kind == "Linf":
        # every point of atom ∩ [p-d, p+d] is nearest
        nlo = np.maximum(lo, p - d)
        nhi = np.minimum(hi, p + d)
        # guard against rounding pushing a side empty
        nhi = np.maximum(nhi, nlo)
        return d, nlo, nhi
    return d, c, c.copy()


def nearest_sets(region, p, metric: Metric) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Minimal distance from p to the region and the sub-boxes attaining it.

    For L1 and L2 every returned box is a single point (clamping is the
    unique minimizer on a box); for Linf the boxes may be fat.
    """
    p = _check_dim(region, p)
    found = [_atom_nearest(a, p, metric) for a in region.atoms()]
    dmin = min(f[0] for f in found)
    slack = _TIE_RTOL * max(1.0, dmin)
    return dmin, [(lo, hi) for d, lo, hi in found if d <= dmin + slack]


def region_project(region, p, metric: Metric) -> Point:
    """Nearest point of the region; ties go to the lexicographically smallest."""
    _, boxes = nearest_sets(region, p, metric)
    return min(as_point(lo) for lo, _ in boxes)


def region_distance(region, pts, metric: Metric) -> np.ndarray:
    """Vectorized distance from each row of pts to the region."""
    pts = np.atleast_2d(_check_dim(region, pts))
    best = np.full(pts.shape[0], np.inf)
    for atom in region.atoms():
        c = np.clip(pts, np.asarray(atom.lo), np.asarray(atom.hi))
        best = np.minimum(best, metric.dist(pts, c))
    return best


def region_contains(region, p, tol: float = DEFAULT_MEMBERSHIP_TOL, metric: Metric | None = None) -> bool:
    p = _check_dim(region, p)
    metric = metric or Metric("L2", region.dim)
    return bool(region_distance(region, p[None, :], metric)[0] <= tol)


def _axis_spacing(resolution: float, dim: int, metric: Metric | None) -> float:
    if metric is None or metric.kind == "Linf":
        return resolution
    if metric.kind == "L1":
        return min(resolution, 2.0 * resolution / dim)
    return min(resolution, 2.0 * resolution / math.sqrt(dim))


def _axis_grid(lo: float, hi: float, h: float) -> np.ndarray:
    if lo == hi:
        return np.array([lo])
    k = max(1, math.ceil((hi - lo) / h - 1e-9))
    return np.linspace(lo, hi, k + 1)


def region_sample(
    region,
    resolution: float,
    trunc_radius: float | None = None,
    metric: Metric | None = None,
    window: tuple[Sequence[float], Sequence[float]] | None = None,
) -> np.ndarray:
    """Grid sample of region ∩ [-R, R]^n (∩ window), rows sorted lexicographically.

    Per-axis spacing never exceeds ``resolution``; when a metric is given it
    is shrunk so that every covered region point has a sample within
    ``resolution`` in that metric.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    n = region.dim
    h = _axis_spacing(resolution, n, metric)
    chunks = []
    for atom in region.atoms():
        R = atom.trunc_radius if trunc_radius is None else trunc_radius
        lo = np.maximum(np.asarray(atom.lo), -R)
        hi = np.minimum(np.asarray(atom.hi), R)
        if window is not None:
            lo = np.maximum(lo, np.asarray(window[0], dtype=float))
            hi = np.minimum(hi, np.asarray(window[1], dtype=float))
        if np.any(lo > hi):
            continue
        axes = [_axis_grid(float(a), float(b), h) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        chunks.append(np.stack([m.ravel() for m in mesh], axis=1))
    if not chunks:
        raise EmptyAfterTruncation(f"no sample of {region!r} survives truncation")
    return np.unique(np.concatenate(chunks), axis=0)


# ---------------------------------------------------------------------------
# set-to-set distance


@dataclass(frozen=True)
class DistanceCertificate:
    value: float
    witness_g: Point
    witness_h: Point
    method: str
    resolution: float | None = None

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "witness_g": list(self.witness_g),
            "witness_h": list(self.witness_h),
            "method": self.method,
            "resolution": self.resolution,
        }


def _box_pair(a: Box, b: Box, metric: Metric) -> tuple[float, Point, Point]:
    g, h = [], []
    for alo, ahi, blo, bhi in zip(a.lo, a.hi, b.lo, b.hi):
        if ahi < blo:
            g.append(ahi)
            h.append(blo)
        elif bhi < alo:
            g.append(alo)
            h.append(bhi)
        else:
            lo, hi = max(alo, blo), min(ahi, bhi)
            c = lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0)
            g.append(c)
            h.append(c)
    return metric_eval(metric, g, h), tuple(g), tuple(h)


def distance_between_regions(
    G,
    H,
    metric: Metric,
    refine_steps: int = DEFAULT_REFINE_STEPS,
    method: str = "auto",
    start_resolution: float = DEFAULT_START_RESOLUTION,
) -> DistanceCertificate:
    """dist(G, H) with witnesses.

    ``method="auto"`` is exact for the whole catalog (minimum of per-axis
    gap norms over box atoms).  ``method="grid"`` runs the nested grid
    refinement instead; it is kept as an independent route.
    """
    if G.dim != H.dim or G.dim != metric.dim:
        raise DimensionMismatch("G, H and metric dimensions differ")
    if method == "grid":
        return grid_distance(G, H, metric, refine_steps, start_resolution)
    best = None
    for a in G.atoms():
        for b in H.atoms():
            d, g, h = _box_pair(a, b, metric)
            key = (d, g, h)
            if best is None or key < best:
                best = key
    d, g, h = best
    return DistanceCertificate(d, g, h, "analytic")


def _closest_pair(A: np.ndarray, B: np.ndarray, metric: Metric, chunk: int = 2048) -> tuple[float, int, int]:
    best = (math.inf, 0, 0)
    for start in range(0, A.shape[0], chunk):
        block = A[start : start + chunk]
        D = metric.dist(block[:, None, :], B[None, :, :])
        i, j = np.unravel_index(np.argmin(D), D.shape)
        if D[i, j] < best[0]:
            best = (float(D[i, j]), start + int(i), int(j))
    return best


def grid_distance(
    G,
    H,
    metric: Metric,
    refine_steps: int = DEFAULT_REFINE_STEPS,
    start_resolution: float = DEFAULT_START_RESOLUTION,
) -> DistanceCertificate:
    res = start_resolution
    A = region_sample(G, res, metric=metric)
    B = region_sample(H, res, metric=metric)
    d, i, j = _closest_pair(A, B, metric)
    g, h = A[i], B[j]
    for _ in range(refine_steps):
        half = res
        res = res / 2
        A = region_sample(G, res, metric=metric, window=(g - 2 * half, g + 2 * half))
        B = region_sample(H, res, metric=metric, window=(h - 2 * half, h + 2 * half))
        d_new, i, j = _closest_pair(A, B, metric)
        if d_new <= d:
            d, g, h = d_new, A[i], B[j]
    return DistanceCertificate(d, as_point(g), as_point(h), "grid", res)
