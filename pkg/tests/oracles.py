"""Hand-coded oracles, independent of the package's geometry and DSL code.

Every example map is written out as a plain numpy closure, regions are
sampled with explicit linspace grids and distances use explicit formulas.
"""
import numpy as np


def d1(a, b):
    return np.abs(np.asarray(a, float) - np.asarray(b, float)).sum(axis=-1)


def d_abs(a, b):
    return np.abs(np.asarray(a, float) - np.asarray(b, float))[..., 0]


def grid_1d(lo, hi, h):
    n = int(round((hi - lo) / h))
    return np.linspace(lo, hi, n + 1)[:, None]


def grid_box(bounds, h):
    axes = [np.linspace(lo, hi, int(round((hi - lo) / h)) + 1) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_segment(start, end, h):
    start, end = np.asarray(start, float), np.asarray(end, float)
    n = int(round(np.abs(end - start).max() / h))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return start + t * (end - start)


def S_basha(p):
    return (2 - 3 * p[..., :1]) / 4


def S_kannan(p):
    return 9 - p[..., :1]


def S_piecewise(p):
    x = p[..., 0]
    return np.where(x <= 4, 1.0, 5 - x)[..., None]


def S_l1(p):
    return np.stack([np.ones_like(p[..., 0]), p[..., 1] / 2], axis=-1)


def S_segment(p):
    return np.stack([p[..., 0] / 2, np.zeros_like(p[..., 0])], axis=-1)


def S_two(p):
    return np.zeros_like(p[..., :1])


def S_strong(p):
    return 6 - p[..., :1]


# (closure, metric, G sampler at resolution h, dist(G, H) from hand analysis, dimension)
FIXTURES = {
    "basha-ex1": (S_basha, d_abs, lambda h: grid_1d(2, 100, h), 3.0, 1),
    "kannan-ex": (S_kannan, d_abs, lambda h: grid_1d(6, 7, h), 3.0, 1),
    "piecewise-Aprime": (S_piecewise, d_abs, lambda h: grid_1d(3, 5, h), 2.0, 1),
    "l1-second-type": (S_l1, d1, lambda h: grid_box([(4, 5), (0, 1)], h), 3.0, 2),
    "segment-union": (
        S_segment,
        d1,
        lambda h: np.concatenate([grid_segment((2, 0), (2, 3), h), grid_segment((0, 2), (2, 2), h)]),
        1.0,
        2,
    ),
    "two-interval": (S_two, d_abs, lambda h: np.concatenate([grid_1d(-1, -0.5, h), grid_1d(0.5, 1, h)]), 0.5, 1),
    "strong-ex": (S_strong, d_abs, lambda h: grid_1d(0, 1, h), 4.0, 1),
}


def brute_force_argmin(name, h):
    """All grid points minimizing |d(x, Sx) - dist| (ties within 1e-12)."""
    S, d, sampler, dist, _ = FIXTURES[name]
    X = sampler(h)
    r = np.abs(d(X, S(X)) - dist)
    return X[r <= r.min() + 1e-12], float(r.min())


def class_A_k(name, **p):
    """Exact k for the class-A hypotheses of catalog relations (both branches)."""
    if name == "basha":
        return p["alpha"]
    if name == "kannan":
        a = p["alpha"]
        return max(a / (1 - a), 2 * a)
    if name == "reich":
        a1, a2, a3 = p["alpha1"], p["alpha2"], p["alpha3"]
        return max((a1 + a2) / (1 - a3), (a2 + a3) / (1 - a1))
    if name in ("bianchini", "max3"):
        return p["alpha"]
    if name == "khan":
        return max(p["alpha"] ** 2, p["alpha"])
    raise KeyError(name)


def class_A_alpha(name, **p):
    return {"basha": p.get("alpha"), "reich": p.get("alpha1"), "max3": p.get("alpha")}.get(name) or 0.0
