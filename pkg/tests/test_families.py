import math

import pytest

from mapbones.errors import DomainError
from mapbones.families import (
    D_HALF, Dyadic, classify_hyperbolic, critical_points_q_composition,
    detect_periodic_critical, eval_logistic, eval_stunted,
    eval_stunted_float, orbit_to_csv, pair_orbit, q_param, st_param,
    zero_is_repelling,
)
from mapbones.symbolic import OrderData, Symbol

from conftest import random_dyadic


# ---------------------------------------------------------------------------
# dyadic arithmetic


def test_dyadic_normalization():
    assert Dyadic(4, 3) == Dyadic(1, 1)
    assert Dyadic(0, 7).exp == 0
    assert Dyadic(6, 1) == Dyadic(3, 0)


def test_dyadic_arithmetic():
    a, b = Dyadic(3, 2), Dyadic(1, 3)
    assert a + b == Dyadic(7, 3)
    assert a - b == Dyadic(5, 3)
    assert a * b == Dyadic(3, 5)
    assert (1 - a) == Dyadic(1, 2)
    assert a.halve() == Dyadic(3, 3)
    assert a.double() == Dyadic(3, 1)
    assert float(a) == 0.75


def test_dyadic_ordering_and_hash():
    xs = [Dyadic(1, 2), Dyadic(1, 1), Dyadic(3, 2)]
    assert sorted(xs) == [Dyadic(1, 2), Dyadic(1, 1), Dyadic(3, 2)]
    assert len({Dyadic(2, 2), Dyadic(1, 1)}) == 1


def test_dyadic_serialization():
    d = Dyadic(13, 4)
    assert d.serialize() == "13/2^4"
    assert Dyadic.parse("13/2^4") == d
    assert Dyadic.from_value(0.8125) == d
    assert Dyadic.from_value(d.as_fraction()) == d


def test_dyadic_rejects_non_dyadic_fraction():
    from fractions import Fraction
    with pytest.raises(DomainError):
        Dyadic.from_value(Fraction(1, 3))


# ---------------------------------------------------------------------------
# map evaluation


def test_eval_logistic_anchors():
    assert eval_logistic(1.0, 0.5) == 1.0
    assert eval_logistic(0.77, 0.0) == 0.0
    assert eval_logistic(0.5, 0.5) == 0.5


def test_eval_stunted_anchors():
    assert eval_stunted(D_HALF, D_HALF) == D_HALF
    assert eval_stunted(Dyadic(1, 0), Dyadic(1, 2)) == D_HALF
    # right tent branch, checked by hand against the piecewise formula
    assert eval_stunted(Dyadic(3, 2), Dyadic(7, 3)) == Dyadic(1, 2)


def test_eval_stunted_plateau_edges_agree_with_branches():
    v = Dyadic(3, 2)
    edge = v.halve()
    assert eval_stunted(v, edge) == v == edge.double()


def test_eval_stunted_float_matches_exact(rng):
    for _ in range(200):
        v, x = random_dyadic(rng), random_dyadic(rng)
        assert eval_stunted_float(float(v), float(x)) == float(eval_stunted(v, x))


def test_zero_is_repelling():
    assert zero_is_repelling(0.5, 0.5)
    assert not zero_is_repelling(0.1, 0.1)


# ---------------------------------------------------------------------------
# orbits


def test_pair_orbit_st_bicritical():
    rec = pair_orbit(st_param(D_HALF, D_HALF), D_HALF)
    assert rec.status.kind == "periodic"
    assert rec.status.period == 2
    assert rec.itinerary.per == (Symbol(1, "C"), Symbol(2, "C"))


def test_pair_orbit_q_period2():
    rec = pair_orbit(q_param(0.5, 0.5), 0.5)
    assert rec.status.kind == "periodic"
    assert rec.status.period == 2


def test_pair_orbit_q_collapse_to_zero():
    rec = pair_orbit(q_param(0.1, 0.1), 0.3, max_steps=4000)
    assert rec.status.kind == "eventually_periodic"
    assert rec.status.period == 2  # the origin, seen once per lane
    assert abs(rec.points[-1]) < 1e-6


def test_pair_orbit_truncated():
    rec = pair_orbit(q_param(0.97, 0.93), 0.123, max_steps=64)
    assert rec.status.kind == "truncated"
    assert len(rec.points) == 65


def test_st_orbit_replay_is_bit_identical(rng):
    for _ in range(20):
        p = st_param(random_dyadic(rng), random_dyadic(rng))
        x0 = random_dyadic(rng)
        r1 = pair_orbit(p, x0)
        r2 = pair_orbit(p, x0)
        assert r1.points == r2.points
        assert r1.itinerary == r2.itinerary


def test_q_symbols_stable_under_small_perturbation(rng):
    # symbols agree while the grown perturbation stays below the distance
    # to the fold; spreading is exponential, so that is the honest horizon
    p = q_param(0.83, 0.9)
    for _ in range(10):
        x0 = rng.random()
        a = pair_orbit(p, x0, max_steps=40)
        b = pair_orbit(p, min(1.0, x0 + 1e-11), max_steps=40)
        for k in range(min(len(a.points), len(b.points))):
            gap = abs(a.points[k] - b.points[k])
            fold_dist = abs(a.points[k] - 0.5)
            if gap >= fold_dist or fold_dist < 1e-9:
                break
            assert a.itinerary.symbol(k) == b.itinerary.symbol(k)


def test_orbit_csv_dump():
    rec = pair_orbit(st_param(D_HALF, D_HALF), D_HALF)
    text = orbit_to_csv(rec)
    lines = text.strip().splitlines()
    assert lines[0] == "step,lane,value,symbol"
    assert lines[1] == "0,1,1/2^1,G1"


# ---------------------------------------------------------------------------
# critical points of the composition


def test_critical_points_real_triple():
    cp = critical_points_q_composition(1.0)
    c1 = 0.5 * (1 - math.sqrt(0.5))
    assert cp.kind == "real_triple"
    assert cp.points[0] == pytest.approx(c1, abs=1e-15)
    assert cp.points[2] == pytest.approx(1 - c1, abs=1e-15)


def test_critical_points_degenerate_and_complex():
    assert critical_points_q_composition(0.5).kind == "degenerate"
    assert critical_points_q_composition(0.25).kind == "complex_pair"
    assert critical_points_q_composition(0.0).kind == "complex_pair"


def test_outer_critical_values_share_midpoint(rng):
    for _ in range(50):
        v = 0.5 + 0.5 * rng.random()
        cp = critical_points_q_composition(v)
        if cp.kind != "real_triple":
            continue
        c1, _, c3 = cp.points
        assert abs(eval_logistic(v, c1) - 0.5) < 1e-14
        assert abs(eval_logistic(v, c3) - 0.5) < 1e-14


# ---------------------------------------------------------------------------
# periodic criticals and hyperbolic classification


def test_detect_periodic_critical_st():
    res = detect_periodic_critical(st_param(D_HALF, D_HALF), which=1)
    assert res == (2, OrderData((1,), (1,)))


def test_detect_periodic_critical_q_on_bone():
    v = 0.6
    w = 1 / (8 * v * (1 - v))
    res = detect_periodic_critical(q_param(v, w), which=1)
    assert res is not None
    assert res[0] == 2


def test_detect_periodic_critical_off_bone():
    assert detect_periodic_critical(q_param(0.3, 0.4), which=1) is None


def test_classify_bitransitive_center():
    res = classify_hyperbolic(q_param(0.5, 0.5))
    assert res.kind == "bitransitive"
    assert not res.degenerate
    assert abs(res.multiplier1) < 1e-9


def test_classify_zero_basin_degenerate():
    res = classify_hyperbolic(q_param(0.1, 0.1))
    assert res.kind == "bitransitive"
    assert res.degenerate


def test_classify_disjoint_sinks_at_secondary():
    from mapbones.q_bones import q_secondary_intersections, traced_bone
    left = traced_bone(OrderData((1, 2), (2, 1)), "left")
    right = traced_bone(OrderData((1,), (1,)), "right")
    recs = [r for r in q_secondary_intersections(left, right)
            if r.kind == "secondary"]
    res = classify_hyperbolic(recs[0].param)
    assert res.kind == "disjoint_sinks"
    assert len(res.cycle1) == 4 and len(res.cycle2) == 2


def test_classify_requires_logistic_family():
    with pytest.raises(DomainError):
        classify_hyperbolic(st_param(D_HALF, D_HALF))
