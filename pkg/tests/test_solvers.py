import math

import numpy as np
import pytest

from proxipoint.dsl import parse_map, parse_relation
from proxipoint.engine import ProximalInstance, compute_proximal_pair
from proxipoint.errors import (
    Diverging,
    DistZero,
    MaxIterExceeded,
    NoFeasiblePoint,
    SequenceMissing,
    StartNotProximal,
    TooShort,
)
from proxipoint.metric import Interval, Metric
from proxipoint.registry import example_config
from proxipoint.solvers import (
    IterationTrace,
    check_rate_bound,
    check_uniqueness,
    estimate_rate,
    solve_first_kind,
    solve_second_kind,
    solve_strong,
)


def inst(name):
    return example_config(name).instance


def instance_1d(G, H, S, f="0.5*r", ctype="first"):
    return ProximalInstance(Metric("L2", 1), G, H, parse_map(S), parse_relation(f), ctype)


# --- first kind ----------------------------------------------------------------


def test_first_kind_basha():
    res = solve_first_kind(inst("basha-ex1"), (2,))
    assert res.point == (2.0,) and res.residual == 0.0 and res.iterations == 1
    assert res.k_hat is None and "TooShort" in res.rate_note


def test_first_kind_l1_trace_halves():
    # u_{n+1} = (4, y_n / 2) from (4, 1)
    res = solve_first_kind(inst("l1-second-type"), (4, 1))
    ys = [u[1] for u in res.trace.iterates]
    assert all(u[0] == 4.0 for u in res.trace.iterates)
    assert ys[:6] == [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125]
    assert res.point[0] == 4.0 and abs(res.point[1]) <= 1e-6
    assert res.residual <= 1e-6


def test_first_kind_piecewise():
    res = solve_first_kind(inst("piecewise-Aprime"), (3,))
    assert res.point == (3.0,) and res.residual == 0.0


def test_first_kind_kannan():
    res = solve_first_kind(inst("kannan-ex"), (6,))
    assert res.point == (6.0,) and res.unique.status == "unique"


def test_start_not_proximal():
    with pytest.raises(StartNotProximal):
        solve_first_kind(inst("kannan-ex"), (6.5,))


def test_no_feasible_point_propagates():
    # G0 = {1} but S(1) = 4 is not in H0 = {3}
    i = instance_1d(Interval(0, 1), Interval(3, 4), "3+x")
    with pytest.raises(NoFeasiblePoint):
        solve_first_kind(i, (1,))


def test_diverging():
    i = instance_1d(Interval(), Interval(), "2*x")
    with pytest.raises(Diverging):
        solve_first_kind(i, (1,))


def test_max_iter():
    with pytest.raises(MaxIterExceeded):
        solve_first_kind(inst("l1-second-type"), (4, 1), max_iter=5)


def test_geometric_envelope():
    res = solve_first_kind(inst("l1-second-type"), (4, 1))
    k = res.k_hat
    assert all(s <= res.trace.steps[0] * k**n + 1e-9 for n, s in enumerate(res.trace.steps))


# --- second kind -----------------------------------------------------------------


def test_second_kind_l1():
    res = solve_second_kind(inst("l1-second-type"), (4, 1))
    assert res.point[0] == 4.0 and abs(res.point[1]) <= 1e-6
    assert res.unique.status == "unique"


def test_second_kind_segment_union():
    res = solve_second_kind(inst("segment-union"), (2, 1))
    assert res.point == (2.0, 0.0) and res.residual == 0.0
    assert res.unique.status == "unique"


def test_second_kind_two_interval():
    res = solve_second_kind(inst("two-interval"), (0.5,))
    assert res.point in ((0.5,), (-0.5,))
    assert res.unique.status == "multiple"
    assert res.unique.points == [(-0.5,), (0.5,)]


@pytest.mark.parametrize("name,x0", [("l1-second-type", (4, 1)), ("segment-union", (2, 1)), ("two-interval", (0.5,))])
def test_first_and_second_kind_agree(name, x0):
    a = solve_first_kind(inst(name), x0)
    b = solve_second_kind(inst(name), x0)
    assert max(abs(p - q) for p, q in zip(a.point, b.point)) <= 1e-6


# --- rate ------------------------------------------------------------------------


def test_rate_l1():
    res = solve_first_kind(inst("l1-second-type"), (4, 1))
    assert estimate_rate(res.trace) == pytest.approx(0.5, abs=1e-9)
    assert not check_rate_bound(res.trace, 0.5, res.trace.metric)


def test_rate_too_short():
    m = Metric("L2", 1)
    const = IterationTrace([(1.0,)] * 5, [0.0] * 4, [], [0.0] * 5, m)
    with pytest.raises(TooShort):
        estimate_rate(const)
    with pytest.raises(TooShort):
        estimate_rate(solve_first_kind(inst("basha-ex1"), (2,)).trace)


def test_rate_bound_detects_slow_trace():
    m = Metric("L2", 1)
    pts = [(1.0,), (0.5,), (0.25,), (0.125,), (0.0,)]
    trace = IterationTrace(pts, [0.5, 0.25, 0.125, 0.125], [], [0.0] * 5, m)
    assert check_rate_bound(trace, 0.1, m)


# --- strong ----------------------------------------------------------------------


def test_strong_example():
    res, fam = solve_strong(inst("strong-ex"), 64)
    assert abs(res.point[0] - 1.0) <= 1e-6 and res.residual <= 1e-6
    assert res.unique.status == "unique"
    assert fam.nested
    assert fam.alpha == pytest.approx(0.25, abs=1e-12)


def test_strong_F4():
    # d(x, Sx) = 6 - 2x <= 5 iff x >= 0.5
    _, fam = solve_strong(inst("strong-ex"), 64)
    p, members, diam, _ = fam.levels[3]
    assert p == 4
    assert members[:, 0].min() == 0.5 and members[:, 0].max() == 1.0
    assert diam == 0.5


def test_strong_diameters_and_bound():
    _, fam = solve_strong(inst("strong-ex"), 64)
    for p, members, diam, bound in fam.levels:
        assert abs(diam - min(1.0, 2.0 / p)) <= fam.resolution
        assert diam <= 16 / (3 * p) + fam.resolution
        assert bound == pytest.approx(16 / (3 * p) + fam.resolution)
    for (_, outer, _, _), (_, inner, _, _) in zip(fam.levels, fam.levels[1:]):
        assert {tuple(r) for r in inner} <= {tuple(r) for r in outer}


def test_strong_members_satisfy_definition():
    i = inst("strong-ex")
    _, fam = solve_strong(i, 16)
    for p, members, _, _ in fam.levels:
        d = np.abs(members[:, 0] - (6 - members[:, 0]))
        assert np.all(d <= (1 + 1 / p) * 4 + i.tolerances.tol_feas)


def test_strong_sequence_missing():
    # d(x, Sx) = 5 everywhere while dist = 4, so F_p is empty once p > 4
    i = instance_1d(Interval(0, 1), Interval(5, 6), "5+x", "0.25*(r+s+t)", "strong")
    with pytest.raises(SequenceMissing):
        solve_strong(i, 64)


def test_strong_dist_zero():
    i = instance_1d(Interval(0, 1), Interval(0, 1), "1-x", "0.25*(r+s+t)", "strong")
    with pytest.raises(DistZero):
        solve_strong(i, 8)


# --- uniqueness ------------------------------------------------------------------


def test_uniqueness_examples():
    assert check_uniqueness(inst("kannan-ex"), (6,)).points == [(6.0,)]
    assert check_uniqueness(inst("kannan-ex"), (6,)).status == "unique"
    two = check_uniqueness(inst("two-interval"), (0.5,))
    assert two.status == "multiple" and two.points == [(-0.5,), (0.5,)]
    strong = check_uniqueness(inst("strong-ex"), (1,))
    assert strong.status == "unique" and strong.points == [(1.0,)]


def test_uniqueness_finds_off_grid_solutions():
    # fixed points 0.3 and 0.7 (dist = 0) are not on the dyadic grid
    i = instance_1d(Interval(0, 1), Interval(0, 1), "piece x in [0,0.5]: 0.3; piece x in [0.5,1]: 0.7")
    pair = compute_proximal_pair(i)
    assert pair.dist == 0.0
    u = check_uniqueness(i, (0.3,), pair)
    assert u.status == "multiple"
    assert [p[0] for p in u.points] == pytest.approx([0.3, 0.7], abs=1e-6)


def test_solver_points_are_best_proximity_points():
    for name, x0 in [("basha-ex1", (2,)), ("kannan-ex", (6,)), ("piecewise-Aprime", (3,))]:
        i = inst(name)
        pair = compute_proximal_pair(i)
        res = solve_first_kind(i, x0, pair=pair)
        assert abs(i.d(res.point, i.S_point(res.point)) - pair.dist) <= 1e-6
        assert math.isclose(res.residual, abs(i.d(res.point, i.S_point(res.point)) - pair.dist))
