"""Best proximity point solvers: proximal iteration (first and second kind),
nested F_p families (strong contractions), rate estimation and uniqueness scans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .engine import (
    ProximalInstance,
    ProximalPair,
    compute_proximal_pair,
    in_G0,
    proximal_step,
    residuals,
)
from .errors import (
    Diverging,
    DistZero,
    MaxIterExceeded,
    ProxipointError,
    RateBoundViolated,
    RateGeqOne,
    SequenceMissing,
    StartNotProximal,
    SubsequenceNotFound,
    TooShort,
)
from .metric import Point, as_point
from .relations import alpha_estimate

DEFAULT_MAX_ITER = 10_000
DEFAULT_P_MAX = 64
DIVERGENCE_RUN = 10
_P_FOR_KDTREE = {"L1": 1, "L2": 2, "Linf": np.inf}


@dataclass
class IterationTrace:
    iterates: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    image_steps: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    metric: object = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "iterates": [list(p) for p in self.iterates],
            "steps": self.steps,
            "image_steps": self.image_steps,
            "residuals": self.residuals,
        }


@dataclass
class Uniqueness:
    status: str  # unique | multiple | unknown
    points: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"status": self.status, "points": [list(p) for p in self.points]}


@dataclass
class NestedFamily:
    levels: list  # (p, members, diameter, bound)
    resolution: float
    alpha: float | None
    nested: bool

    def diameters(self) -> list[float]:
        return [lvl[2] for lvl in self.levels]

    def to_json(self) -> dict:
        return {
            "resolution": self.resolution,
            "alpha": self.alpha,
            "nested": self.nested,
            "levels": [
                {"p": p, "size": int(m.shape[0]), "diameter": d, "bound": b} for p, m, d, b in self.levels
            ],
        }


@dataclass
class SolveResult:
    point: Point
    residual: float
    iterations: int
    trace: IterationTrace
    k_hat: float | None
    unique: Uniqueness
    scheme: str
    rate_note: str | None = None
    family: NestedFamily | None = None

    def to_json(self) -> dict:
        out = {
            "scheme": self.scheme,
            "point": list(self.point),
            "residual": self.residual,
            "iterations": self.iterations,
            "k_hat": self.k_hat,
            "rate_note": self.rate_note,
            "uniqueness": self.unique.to_json(),
            "trace_length": len(self.trace.iterates),
        }
        if self.family is not None:
            out["family"] = self.family.to_json()
        return out


# ---------------------------------------------------------------------------
# iteration


def _iterate(instance, pair, x0, max_iter, on_images):
    tol = instance.tolerances
    x0 = as_point(x0)
    if not in_G0(instance, pair, x0):
        raise StartNotProximal(f"x0={x0} is not in G0")
    d = instance.d
    u = x0
    Su = instance.S_point(u)
    trace = IterationTrace([u], [], [], [abs(d(u, Su) - pair.dist)], instance.metric)
    expanding = 0
    for _ in range(max_iter):
        nxt = proximal_step(instance, pair, Su, prev=u)
        Snxt = instance.S_point(nxt)
        step = d(u, nxt)
        image_step = d(Su, Snxt)
        watched = trace.image_steps if on_images else trace.steps
        last = watched[-1] if watched else None
        trace.iterates.append(nxt)
        trace.steps.append(step)
        trace.image_steps.append(image_step)
        trace.residuals.append(abs(d(nxt, Snxt) - pair.dist))
        current = image_step if on_images else step
        if last is not None and last > 0 and current > last:
            expanding += 1
            if expanding >= DIVERGENCE_RUN:
                raise Diverging(f"{DIVERGENCE_RUN} consecutive expanding steps, last {current}")
        else:
            expanding = 0
        u, Su = nxt, Snxt
        if current <= tol.tol_step:
            return trace
    raise MaxIterExceeded(f"no convergence within {max_iter} iterations (last step {current})")


def _finish(instance, pair, trace, point, residual, scheme, check_unique):
    try:
        k_hat, note = estimate_rate(trace), None
    except (TooShort, RateGeqOne, RateBoundViolated) as exc:
        k_hat, note = None, f"{type(exc).__name__}: {exc}"
    unique = check_uniqueness(instance, point, pair) if check_unique else Uniqueness("unknown")
    return SolveResult(point, residual, len(trace.iterates) - 1, trace, k_hat, unique, scheme, note)


def solve_first_kind(
    instance: ProximalInstance,
    x0,
    max_iter: int = DEFAULT_MAX_ITER,
    pair: ProximalPair | None = None,
    check_unique: bool = True,
) -> SolveResult:
    """Iterate u_{n+1} = proximal_step(S u_n) until d(u_n, u_{n+1}) <= tol_step."""
    pair = pair or compute_proximal_pair(instance)
    trace = _iterate(instance, pair, x0, max_iter, on_images=False)
    point = trace.iterates[-1]
    residual = trace.residuals[-1]
    if residual > instance.tolerances.tol_residual:
        raise SubsequenceNotFound(f"iteration stalled with residual {residual}")
    return _finish(instance, pair, trace, point, residual, "first", check_unique)


def solve_second_kind(
    instance: ProximalInstance,
    x0,
    max_iter: int = DEFAULT_MAX_ITER,
    pair: ProximalPair | None = None,
    check_unique: bool = True,
) -> SolveResult:
    """Same iteration, stopped on the image steps d(S v_n, S v_{n+1}).

    The returned point is the tail iterate with the smallest residual; it
    stands in for the limit of a convergent subsequence.
    """
    pair = pair or compute_proximal_pair(instance)
    trace = _iterate(instance, pair, x0, max_iter, on_images=True)
    n = len(trace.iterates)
    tail = range(n // 2, n)
    best = min(tail, key=lambda i: (trace.residuals[i], -i))
    residual = trace.residuals[best]
    if residual > instance.tolerances.tol_residual:
        raise SubsequenceNotFound(f"no tail iterate has residual <= {instance.tolerances.tol_residual}")
    return _finish(instance, pair, trace, trace.iterates[best], residual, "second", check_unique)


def estimate_rate(trace: IterationTrace, tol: float = 1e-9) -> float:
    """Largest ratio of consecutive nonzero steps over the last half of the trace.

    Also checks the a-priori bound d(u_n, u_final) <= k^n / (1 - k) * d(u_1, u_0).
    """
    nz = [s for s in trace.steps if s > 0]
    if len(nz) < 3:
        raise TooShort(f"need at least 3 nonzero steps, have {len(nz)}")
    start = len(nz) // 2
    ratios = [nz[i + 1] / nz[i] for i in range(max(0, start - 1), len(nz) - 1)]
    k = max(ratios)
    if k >= 1:
        raise RateGeqOne(f"estimated rate {k} >= 1")
    if trace.metric is not None:
        bad = check_rate_bound(trace, k, trace.metric, tol)
        if bad:
            n, lhs, rhs = bad[0]
            raise RateBoundViolated(f"d(u_{n}, u_final) = {lhs} exceeds the a-priori bound {rhs}")
    return k


def check_rate_bound(trace: IterationTrace, k: float, metric, tol: float = 1e-9) -> list[tuple[int, float, float]]:
    """Indices n where d(u_n, u_final) exceeds k^n/(1-k) d(u_1, u_0) + tol."""
    final = trace.iterates[-1]
    first = trace.steps[0]
    bad = []
    for n, u in enumerate(trace.iterates):
        lhs = metric(u, final)
        rhs = k**n / (1 - k) * first + tol
        if lhs > rhs:
            bad.append((n, lhs, rhs))
    return bad


# ---------------------------------------------------------------------------
# uniqueness


def _lipschitz(instance, X, rng) -> float:
    if X.shape[0] < 2:
        return 0.0
    idx = rng.integers(0, X.shape[0], size=(4000, 2))
    idx = idx[idx[:, 0] != idx[:, 1]]
    a, b = X[idx[:, 0]], X[idx[:, 1]]
    m = instance.metric
    num = m.dist(instance.S_batch(a), instance.S_batch(b))
    den = m.dist(a, b)
    return float((num / den).max()) if den.size else 0.0


def check_uniqueness(instance: ProximalInstance, u, pair: ProximalPair | None = None) -> Uniqueness:
    """Scan the G grid for other best proximity points.

    Grid points whose residual is small enough that a true solution could
    lie within one resolution cell are clustered; each cluster is refined
    locally until it either yields a point with residual <= tol_residual or
    is ruled out.  Clusters that can neither be confirmed nor excluded at
    the resolution floor make the answer ``unknown``.
    """
    pair = pair or compute_proximal_pair(instance)
    tol = instance.tolerances.tol_residual
    res = instance.resolution
    m = instance.metric
    X = instance.sample_G()
    R = residuals(instance, pair, X)
    L = _lipschitz(instance, X, np.random.default_rng(instance.seed))
    near = np.flatnonzero(R <= (1 + L) * res + tol)
    u = as_point(u)
    u_ok = residuals(instance, pair, [u])[0] <= tol
    reps: list[Point] = []
    ambiguous = False
    if near.size:
        P = X[near]
        tree = cKDTree(P)
        links = tree.query_pairs(2 * res * (1 + 1e-9), p=_P_FOR_KDTREE[m.kind], output_type="ndarray")
        graph = coo_matrix((np.ones(len(links)), (links[:, 0], links[:, 1])), shape=(P.shape[0],) * 2)
        n_comp, labels = connected_components(graph, directed=False)
        for c in range(n_comp):
            members = P[labels == c]
            r = R[near][labels == c]
            if r.min() <= tol:
                rep = as_point(members[np.argmin(r)])
            else:
                rep, status = _refine_cluster(instance, pair, members, L)
                if status == "none":
                    continue
                if status == "ambiguous":
                    ambiguous = True
                    continue
            if m(rep, u) <= 2 * res and u_ok:
                rep = u
            reps.append(rep)
    if u_ok and all(m(rep, u) > 2 * res for rep in reps):
        reps.append(u)
    reps = sorted(set(reps))
    if ambiguous:
        return Uniqueness("unknown", reps)
    if len(reps) == 1:
        return Uniqueness("unique", reps)
    if not reps:
        return Uniqueness("unknown", reps)
    return Uniqueness("multiple", reps)


def _refine_cluster(instance, pair, members, L):
    tol = instance.tolerances.tol_residual
    res = instance.resolution
    lo = members.min(axis=0) - res
    hi = members.max(axis=0) + res
    best_r = math.inf
    best = None
    for k in range(1, instance.refine_steps + 1):
        h = res / 2**k
        try:
            pts = instance.sample_G(h, window=(lo, hi))
        except ProxipointError:
            break
        if pts.shape[0] > 200_000:
            break
        r = residuals(instance, pair, pts)
        i = int(np.argmin(r))
        best_r, best = float(r[i]), pts[i]
        if best_r <= tol:
            return as_point(best), "confirmed"
        if best_r > (1 + L) * h * 4 + tol:
            return None, "none"
        lo, hi = best - 2 * h, best + 2 * h
    return None, "ambiguous"


# ---------------------------------------------------------------------------
# strong contractions


def _diameter(pts: np.ndarray, metric, chunk: int = 1024) -> float:
    if pts.shape[0] < 2:
        return 0.0
    if pts.shape[1] == 1:
        return float(pts.max() - pts.min())
    best = 0.0
    for s in range(0, pts.shape[0], chunk):
        best = max(best, float(metric.dist(pts[s : s + chunk, None, :], pts[None, :, :]).max()))
    return best


def solve_strong(
    instance: ProximalInstance,
    p_max: int = DEFAULT_P_MAX,
    pair: ProximalPair | None = None,
    check_unique: bool = True,
) -> tuple[SolveResult, NestedFamily]:
    """Build F_p = {x in G : d(x, Sx) <= (1 + 1/p) dist} on one grid for p = 1..p_max.

    Checks nestedness and the diameter bound dist / ((1 - alpha) p) plus one
    resolution, with alpha estimated from the relation, then locally
    refines the best member of F_{p_max} down to the residual tolerance.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    pair = pair or compute_proximal_pair(instance)
    tol = instance.tolerances
    dist = pair.dist
    if dist <= tol.tol_feas:
        raise DistZero("dist(G, H) = 0; strong contraction results need a positive distance")
    m = instance.metric
    res = instance.resolution
    X = instance.sample_G()
    V = m.dist(X, instance.S_batch(X))

    # make F_{p_max} nonempty by refining around the best sample
    thresh = (1 + 1 / p_max) * dist + tol.tol_feas
    h = res
    for _ in range(instance.refine_steps):
        if (V <= thresh).any():
            break
        b = X[np.argmin(V)]
        h /= 2
        extra = instance.sample_G(h, window=(b - 2 * h, b + 2 * h))
        X = np.unique(np.concatenate([X, extra]), axis=0)
        V = m.dist(X, instance.S_batch(X))
    if not (V <= thresh).any():
        raise SequenceMissing(f"F_{p_max} is empty at the resolution floor")

    alpha = alpha_estimate(instance.f) if instance.declared_class == "A" else None
    levels = []
    prev_mask = None
    nested = True
    for p in range(1, p_max + 1):
        mask = V <= (1 + 1 / p) * dist + tol.tol_feas
        if prev_mask is not None and np.any(mask & ~prev_mask):
            nested = False
        prev_mask = mask
        members = X[mask]
        bound = None if alpha is None else dist / ((1 - alpha) * p) + res
        levels.append((p, members, _diameter(members, m), bound))
    family = NestedFamily(levels, res, alpha, nested)

    last = levels[-1][1]
    v_last = V[prev_mask]
    centroid = last.mean(axis=0)
    order = np.lexsort((m.dist(last, centroid), v_last))
    best = last[order[0]]
    best_v = float(v_last[order[0]])
    h = res
    for _ in range(instance.refine_steps):
        if abs(best_v - dist) <= tol.tol_feas:
            break
        h /= 2
        pts = instance.sample_G(h, window=(best - 2 * h, best + 2 * h))
        v = m.dist(pts, instance.S_batch(pts))
        i = int(np.argmin(v))
        if v[i] < best_v:
            best, best_v = pts[i], float(v[i])
    point = as_point(best)
    residual = abs(best_v - dist)
    if residual > tol.tol_residual:
        raise SubsequenceNotFound(f"smallest F_p member has residual {residual}")
    trace = IterationTrace([point], [], [], [residual])
    unique = check_uniqueness(instance, point, pair) if check_unique else Uniqueness("unknown")
    result = SolveResult(point, residual, p_max, trace, None, unique, "strong", None, family)
    return result, family
