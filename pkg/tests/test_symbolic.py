import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from mapbones.errors import DomainError
from mapbones.symbolic import (
    EQ, GT, LT,
    Itinerary, JointOrderData, KneadingSequence, OrderData, Symbol,
    admissible_order_data, check_admissible, check_admissible_joint,
    compare_itineraries, compare_kneading, compare_ksequences, is_tight_st,
    itinerary_to_order_data, joint_itineraries,
    kneading_from_pair_itineraries, order_data_to_bicritical_itinerary,
)
from mapbones.families import Dyadic, q_param, st_param
from mapbones.st_bones import st_bicritical_params

from conftest import orbit_itinerary, random_dyadic

L1, G1, R1 = Symbol(1, "L"), Symbol(1, "C"), Symbol(1, "R")
L2, G2, R2 = Symbol(2, "L"), Symbol(2, "C"), Symbol(2, "R")


# ---------------------------------------------------------------------------
# itinerary order


def test_compare_identity():
    it = Itinerary((L1, R2, L1), ())
    assert compare_itineraries(it, it) == EQ


def test_compare_first_symbol():
    a = Itinerary((L1, R2), ())
    b = Itinerary((R1, R2), ())
    assert compare_itineraries(a, b) == LT
    assert compare_itineraries(b, a) == GT


def test_compare_parity_flip():
    # one R before the difference reverses the verdict
    a = Itinerary((R1, R2), ())
    b = Itinerary((R1, L2), ())
    assert compare_itineraries(a, b) == LT


def test_compare_lane_mismatch():
    with pytest.raises(DomainError):
        compare_itineraries(Itinerary((L1,), ()), Itinerary((L2,), ()))


def test_compare_eventually_periodic_equality():
    a = Itinerary((L1,), (R2, L1))
    b = Itinerary((L1, R2), (L1, R2))
    assert compare_itineraries(a, b) == EQ
    assert a.normalize() == b.normalize()


def test_serialization_round_trip():
    it = Itinerary.parse("L1 R2 | G1 R2 L1 L2")
    assert it.pre == (L1, R2)
    assert it.per == (G1, R2, L1, L2)
    assert Itinerary.parse(it.serialize()) == it


def _brute_order_check(p, rng, n_pairs=40, steps=30):
    for _ in range(n_pairs):
        x = rng.random()
        y = rng.random()
        if x == y:
            continue
        x, y = min(x, y), max(x, y)
        if p.family == "st":
            x = float(Dyadic(int(x * 4096) or 1, 12))
            y = float(Dyadic(int(y * 4096) + 1, 12))
            if not x < y:
                continue
        a = orbit_itinerary(p, x, steps)
        b = orbit_itinerary(p, y, steps)
        try:
            assert compare_itineraries(a, b) in (LT, EQ)
        except DomainError:
            continue  # shared-critical prefixes are rejected by contract


def test_order_consistent_with_real_line_q(rng):
    for _ in range(6):
        p = q_param(0.25 + 0.75 * rng.random(), 0.25 + 0.75 * rng.random())
        _brute_order_check(p, rng)


def test_order_consistent_with_real_line_st(rng):
    for _ in range(6):
        p = st_param(random_dyadic(rng), random_dyadic(rng))
        _brute_order_check(p, rng)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_total_order_properties(data):
    rng = random.Random(data.draw(st.integers(0, 2 ** 30)))
    p = q_param(0.3 + 0.7 * rng.random(), 0.3 + 0.7 * rng.random())
    its = [orbit_itinerary(p, rng.random(), 24) for _ in range(3)]
    try:
        c01 = compare_itineraries(its[0], its[1])
        c12 = compare_itineraries(its[1], its[2])
        c02 = compare_itineraries(its[0], its[2])
    except DomainError:
        return
    assert compare_itineraries(its[1], its[0]) == -c01
    if c01 == LT and c12 == LT:
        assert c02 == LT
    if c01 == GT and c12 == GT:
        assert c02 == GT


# ---------------------------------------------------------------------------
# order data


def brute_admissible(n):
    """Independent oracle: direct transcription of the two conditions."""
    out = []
    for sigma in itertools.permutations(range(1, n + 1)):
        for tau in itertools.permutations(range(1, n + 1)):
            ok = True
            for perm in (sigma, tau):
                descending = False
                for i in range(n - 1):
                    if perm[i + 1] < perm[i]:
                        descending = True
                    elif descending:
                        ok = False
            if not ok:
                continue
            seen = set()
            i = 1
            for _ in range(n):
                seen.add(i)
                i = tau[sigma[i - 1] - 1]
            if i == 1 and len(seen) == n:
                out.append((sigma, tau))
    return out


def test_admissible_counts():
    assert [len(admissible_order_data(n)) for n in (1, 2, 3)] == [1, 2, 5]


def test_admissible_matches_brute_force():
    for n in range(1, 5):
        mine = {(od.sigma, od.tau) for od in admissible_order_data(n)}
        assert mine == set(brute_admissible(n))


def test_admissible_examples():
    assert check_admissible(OrderData((1,), (1,)))
    assert check_admissible(OrderData((2, 1), (1, 2)))
    assert not check_admissible(OrderData((1, 2), (1, 2)))


def test_period6_list_is_the_known_one():
    expected = {((1, 2, 3), (2, 3, 1)), ((1, 3, 2), (3, 2, 1)),
                ((2, 3, 1), (2, 3, 1)), ((3, 2, 1), (1, 3, 2)),
                ((2, 3, 1), (1, 2, 3))}
    assert {(od.sigma, od.tau) for od in admissible_order_data(3)} == expected


def test_bicritical_itinerary_period2():
    it = order_data_to_bicritical_itinerary(OrderData((1,), (1,)))
    assert it.per == (G1, G2)


def test_bicritical_itinerary_simulation_oracle():
    # forward simulation at the solved parameters reads the same symbols
    od = OrderData((2, 1), (1, 2))
    v0, w0 = st_bicritical_params(od)
    from mapbones.families import pair_orbit, D_HALF
    rec = pair_orbit(st_param(v0, w0), D_HALF)
    it = order_data_to_bicritical_itinerary(od)
    assert rec.itinerary.normalize() == it.normalize()


def test_round_trip_identity():
    for n in range(1, 6):
        for od in admissible_order_data(n):
            it = order_data_to_bicritical_itinerary(od)
            assert itinerary_to_order_data(it) == od


def test_itinerary_to_order_data_rejects_double_critical():
    bad = Itinerary((), (G1, G2, G1, L2))
    with pytest.raises(DomainError):
        itinerary_to_order_data(bad)


def test_itinerary_to_order_data_rejects_nonperiodic():
    with pytest.raises(DomainError):
        itinerary_to_order_data(Itinerary((G1, G2), ()))


def test_self_check_invariants_of_enumeration():
    for n in (1, 2, 3, 4):
        for od in admissible_order_data(n):
            assert check_admissible(od)
            assert sorted(od.sigma) == list(range(1, n + 1))


def test_order_data_serialization():
    od = OrderData((2, 1), (1, 2))
    assert od.serialize() == "s=[2,1];t=[1,2]"
    assert OrderData.parse(od.serialize()) == od


# ---------------------------------------------------------------------------
# joint order data


def test_joint_order_data_blocks():
    jod = JointOrderData((2, 3, 1), (3, 2, 1))
    assert check_admissible_joint(jod)
    assert jod.split() == (2, 1)
    od1, od2 = jod.block_order_data()
    assert od1 == OrderData((1, 2), (2, 1))
    assert od2 == OrderData((1,), (1,))


def test_joint_order_data_rejects_single_cycle():
    # a bicritical datum is not a joint datum
    jod = JointOrderData((1,), (1,))
    assert not check_admissible_joint(jod)


def test_joint_itineraries_match_expected():
    it1, it2 = joint_itineraries(JointOrderData((2, 3, 1), (3, 2, 1)))
    assert it1.per == (G1, R2, L1, R2)
    assert it2.per == (G2, R1)


# ---------------------------------------------------------------------------
# kneading data


def test_kneading_period2_all_periodic():
    it1 = Itinerary((), (G1, G2))
    it2 = Itinerary((), (G2, G1))
    K = kneading_from_pair_itineraries(it1, it2)
    for seq in (K.k1, K.k2, K.k3):
        assert seq.per and not seq.pre
    assert K.k1 == K.k3


def test_kneading_boundary_eventually_constant():
    it1 = order_data_to_bicritical_itinerary(OrderData((1,), (1,)))
    it2 = Itinerary((G2, R1), (L2, L1))
    K = kneading_from_pair_itineraries(it1, it2)
    # outer sequences settle onto the leftmost lap forever
    assert K.k1.per == (0,)
    assert K.k1 == K.k3


def test_kneading_deterministic():
    it1 = Itinerary((), (G1, G2))
    it2 = Itinerary((), (G2, G1))
    assert kneading_from_pair_itineraries(it1, it2) == \
        kneading_from_pair_itineraries(it1, it2)


def test_kneading_unimodal_context():
    it1 = Itinerary((G1, L2), (L1, L2))
    it2 = Itinerary((G2, L1), (L2, L1))
    K = kneading_from_pair_itineraries(it1, it2, "unimodal")
    assert K.modality == "unimodal"
    assert K.k1 is None and K.k3 is None and K.k2 is not None


def test_compare_kneading_self():
    it1 = Itinerary((), (G1, G2))
    it2 = Itinerary((), (G2, G1))
    K = kneading_from_pair_itineraries(it1, it2)
    assert compare_kneading(K, K) == EQ


def test_compare_kneading_modality_mismatch():
    it1 = Itinerary((), (G1, G2))
    it2 = Itinerary((), (G2, G1))
    K3 = kneading_from_pair_itineraries(it1, it2, "trimodal")
    K1 = kneading_from_pair_itineraries(it1, it2, "unimodal")
    with pytest.raises(DomainError):
        compare_kneading(K3, K1)


def test_ksequence_signed_order():
    # H1 is a decreasing lap: it flips the comparison afterwards
    a = KneadingSequence((2, 0), ())
    b = KneadingSequence((2, 6), ())
    assert compare_ksequences(a, b) == GT


# ---------------------------------------------------------------------------
# tightness


def test_tight_at_bicritical_params():
    od = OrderData((1, 2), (2, 1))
    v0, w0 = st_bicritical_params(od)
    it = order_data_to_bicritical_itinerary(od)
    assert is_tight_st(it, (v0, w0))


def test_flabby_after_perturbation():
    # nudging the first plateau off the bone parks an orbit point inside
    # the other plateau, away from its center
    od = OrderData((1,), (1,))
    v0, w0 = st_bicritical_params(od)
    v = v0 + Dyadic(1, 10)
    it = order_data_to_bicritical_itinerary(od)
    assert not is_tight_st(it, (v, w0))


def test_tight_when_orbit_avoids_plateaus():
    it2 = Itinerary((G2, R1), (L2, L1))
    assert is_tight_st(it2, (Dyadic(1, 2), Dyadic(1, 0)))
