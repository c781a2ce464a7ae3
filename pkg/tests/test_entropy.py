import math

import numpy as np
import pytest

from mapbones.entropy import (
    LOG4, entropy_estimate, entropy_grid, entropy_monotonicity_audit,
    grid_to_csv, grid_to_pgm, lap_count, lap_profile, neg_count,
)
from mapbones.errors import BudgetError, DomainError
from mapbones.families import Dyadic, q_param, st_param

from conftest import random_dyadic


def brute_neg(p, k, N=10 ** 6):
    """Diagonal-crossing scan on a fine grid, restricted to decreasing runs."""
    xs = np.linspace(0.0, 1.0, N)
    F = xs.copy()
    v, w = float(p.v), float(p.w)
    for _ in range(k):
        if p.family == "q":
            F = 4 * v * F * (1 - F)
            F = 4 * w * F * (1 - F)
        else:
            F = np.where(F < v / 2, 2 * F, np.where(F > 1 - v / 2, 2 - 2 * F, v))
            F = np.where(F < w / 2, 2 * F, np.where(F > 1 - w / 2, 2 - 2 * F, w))
    g = F - xs
    dec = np.diff(F) < 0
    sgn = np.sign(g)
    cross = sgn[:-1] * sgn[1:] < 0
    return int(np.count_nonzero(dec & cross & (g[:-1] > 0)))


def brute_laps(p, k, N=2_000_001):
    """Monotone or flat runs of the k-th iterate sampled on a fine grid.

    Stunted compositions have genuinely flat stretches which count as laps;
    logistic ones do not, so zero differences there are ties to discard.
    """
    xs = np.linspace(0.0, 1.0, N)
    F = xs.copy()
    v, w = float(p.v), float(p.w)
    for _ in range(k):
        if p.family == "q":
            F = 4 * v * F * (1 - F)
            F = 4 * w * F * (1 - F)
        else:
            F = np.where(F < v / 2, 2 * F, np.where(F > 1 - v / 2, 2 - 2 * F, v))
            F = np.where(F < w / 2, 2 * F, np.where(F > 1 - w / 2, 2 - 2 * F, w))
    s = np.sign(np.diff(F))
    if p.family == "q":
        s = s[s != 0]
    return 1 + int(np.count_nonzero(s[:-1] != s[1:]))


# ---------------------------------------------------------------------------
# lap counts


def test_lap_count_full_tents():
    p = st_param(1, 1)
    assert lap_count(p, 1) == 4
    assert lap_count(p, 2) == 16


def test_lap_count_unimodal_composition():
    assert lap_count(q_param(0.4, 0.9), 1) == 2


def test_lap_count_brute_force_oracle():
    for p in (q_param(0.9, 0.8), q_param(0.7, 0.95),
              st_param(Dyadic(13, 4), Dyadic(7, 3))):
        for k in (2, 4, 6):
            assert lap_count(p, k) == brute_laps(p, k)


def test_st_flat_laps_counted():
    # plateau onto plateau composes to one flat stretch
    assert lap_count(st_param(1, Dyadic(1, 1)), 1) == 6


# ---------------------------------------------------------------------------
# negative-type fixed points


def test_neg_count_anchors():
    assert neg_count(st_param(1, 1), 1) == 2
    assert neg_count(q_param(1.0, 1.0), 1) == 2


def test_neg_zero_in_collapsing_region():
    for p in (q_param(0.1, 0.1), q_param(0.9, 0.05)):
        for k in range(1, 13):
            assert neg_count(p, k) == 0


def test_neg_brute_force_oracle(rng):
    for _ in range(10):
        pq = q_param(rng.random(), rng.random())
        pst = st_param(random_dyadic(rng), random_dyadic(rng))
        for p in (pq, pst):
            for k in (1, 4, 6):
                assert neg_count(p, k) == brute_neg(p, k), (p, k)


def test_neg_bounded_by_laps():
    for p in (q_param(0.95, 0.85), st_param(Dyadic(7, 3), Dyadic(13, 4))):
        laps, negs = lap_profile(p, 10)
        assert all(n <= l for n, l in zip(negs, laps))


def test_st_profiles_bit_identical():
    p = st_param(Dyadic(13, 4), Dyadic(205, 8))
    assert lap_profile(p, 12) == lap_profile(p, 12)


def test_budget_errors():
    with pytest.raises(BudgetError):
        lap_count(q_param(1.0, 1.0), 14, lap_budget=1000)
    with pytest.raises(BudgetError):
        neg_count(q_param(1.0, 1.0), 14, lap_budget=1000)


# ---------------------------------------------------------------------------
# entropy estimates


def test_entropy_full_tents_exact():
    est = entropy_estimate(st_param(1, 1), 10)
    assert est.h == pytest.approx(LOG4, abs=1e-12)
    assert est.err < 1e-9


def test_entropy_quartic_corner():
    est = entropy_estimate(q_param(1.0, 1.0), 12)
    assert est.h == pytest.approx(LOG4, abs=0.02)


def test_entropy_zero_region():
    for (v, w) in ((0.1, 0.1), (0.3, 0.2), (0.9, 0.05)):
        est = entropy_estimate(q_param(v, w), 12)
        assert abs(est.h) <= 0.01


def test_entropy_capped_tent_log2():
    # the half-height plateau caps the composition at entropy log 2; the
    # independent oracle is the brute-force lap growth at moderate depth
    p = st_param(1, Dyadic(1, 1))
    bl = [brute_laps(p, k) for k in (6, 7, 8)]
    oracle = math.log(bl[-1] / bl[-2])
    est = entropy_estimate(p, 14)
    assert est.h == pytest.approx(math.log(2), abs=0.02)
    assert est.h == pytest.approx(oracle, abs=0.02)


def test_entropy_degrades_under_budget():
    est = entropy_estimate(q_param(1.0, 1.0), 12, lap_budget=3000)
    assert est.k_reached < 12
    assert est.h == pytest.approx(LOG4, abs=0.02)  # ratios are exact here


def test_entropy_symmetry_of_composition_order(rng):
    for _ in range(20):
        v, w = rng.random(), rng.random()
        a = entropy_estimate(q_param(v, w), 14, 300_000)
        b = entropy_estimate(q_param(w, v), 14, 300_000)
        assert abs(a.h - b.h) <= 2 * max(a.err + b.err, 0.01)


def test_estimators_agree_where_neg_established():
    # the two growth estimators approach the same limit; the bound applies
    # once negative fixed points are plentiful enough to carry a trend
    worst = 0.0
    for iw in range(0, 32, 3):
        for iv in range(0, 32, 3):
            p = q_param((iv + 0.5) / 32, (iw + 0.5) / 32)
            est = entropy_estimate(p, 14)
            if max(est.negs) >= 100:
                worst = max(worst, abs(est.h_lap - est.h_neg))
    assert worst <= 0.06


# ---------------------------------------------------------------------------
# grids


def test_grid_deterministic_across_workers():
    g1 = entropy_grid("q", 8, kmax=8, lap_budget=50_000, workers=1)
    g2 = entropy_grid("q", 8, kmax=8, lap_budget=50_000, workers=2)
    assert np.array_equal(g1.values, g2.values)
    assert np.array_equal(g1.errors, g2.errors)


def test_grid_st_requires_power_of_two():
    with pytest.raises(DomainError):
        entropy_grid("st", 24, kmax=8)


def test_grid_bounds_and_corner():
    g = entropy_grid("q", 16, kmax=10, lap_budget=100_000)
    assert (g.values >= 0).all() and (g.values <= LOG4 + 1e-12).all()
    assert g.values[-1, -1] > 1.0
    assert g.values[0, 0] == 0.0


def test_grid_csv_and_pgm_formats():
    g = entropy_grid("q", 8, kmax=8, lap_budget=50_000)
    csv = grid_to_csv(g)
    lines = csv.strip().splitlines()
    assert lines[0] == "v,w,h,err,estimator"
    assert len(lines) == 65
    pgm = grid_to_pgm(g)
    assert pgm.startswith(b"P5\n8 8\n255\n")
    assert len(pgm) == len(b"P5\n8 8\n255\n") + 64


def test_grid_repeat_bit_identical():
    g1 = entropy_grid("q", 8, kmax=8, lap_budget=50_000)
    g2 = entropy_grid("q", 8, kmax=8, lap_budget=50_000)
    assert grid_to_csv(g1) == grid_to_csv(g2)
    assert grid_to_pgm(g1) == grid_to_pgm(g2)


# ---------------------------------------------------------------------------
# monotonicity audit


def test_audit_constant_path_passes():
    pts = [q_param(0.5, 0.5)] * 5
    rep = entropy_monotonicity_audit(pts, kmax=8, lap_budget=50_000)
    assert rep.passed and rep.violations == []


def test_audit_flags_decreasing_path():
    pts = [q_param(1.0, 1.0), q_param(0.1, 0.1)]
    rep = entropy_monotonicity_audit(pts, kmax=10, lap_budget=100_000)
    assert not rep.passed


def test_audit_top_boundary():
    pts = [q_param(v, 1.0) for v in np.linspace(0.05, 0.95, 15)]
    rep = entropy_monotonicity_audit(pts, kmax=12, lap_budget=100_000)
    assert rep.passed


def test_entropy_jump_forces_bone_crossing():
    # desk-scale echo of the density mechanism: whenever two parameters
    # carry entropies more than 0.05 apart, the straight path between them
    # meets a traced bone of period at most 8 (fixed sample of pairs)
    import random

    from mapbones.q_bones import _segments_cross, traced_bone
    from mapbones.symbolic import admissible_order_data

    bones = [traced_bone(od, side)
             for n in (1, 2, 3, 4) for od in admissible_order_data(n)
             for side in ("left", "right")]
    sampler = random.Random(20240817)
    checked = 0
    while checked < 8:
        a = (sampler.uniform(0.05, 0.95), sampler.uniform(0.05, 0.95))
        b = (sampler.uniform(0.05, 0.95), sampler.uniform(0.05, 0.95))
        ha = entropy_estimate(q_param(*a), 12, 100_000).h
        hb = entropy_estimate(q_param(*b), 12, 100_000).h
        if abs(ha - hb) <= 0.05:
            continue
        checked += 1
        path = np.array([a, b])
        assert any(_segments_cross(path, bone.polyline) for bone in bones), \
            (a, b, ha, hb)
