"""Exact bone construction in the stunted-tent model space.

Everything here is exact: orbit values are dyadic, parameter dependence of
an orbit value is affine with rational coefficients, and bone coordinates
come out of linear solves.  A left bone is three axis-aligned segments
{v1,v2} x [w0,1] plus (v1,v2) x {w0}; right bones are the mirror image of
left bones with transposed order data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import DomainError, InfeasibleError
from .families import (
    D_HALF, D_ONE, Dyadic, ParamPoint, pair_orbit, st_param,
)
from .symbolic import (
    Itinerary, JointOrderData, OrderData, Symbol,
    check_admissible_joint, joint_itineraries,
    order_data_to_bicritical_itinerary,
)

F = Fraction
HALF = F(1, 2)


def _mirror_itinerary(it: Itinerary) -> Itinerary:
    swap = lambda s: Symbol(3 - s.lane, s.kind)
    return Itinerary(tuple(map(swap, it.pre)), tuple(map(swap, it.per)))


def _backward_from_center(it: Itinerary) -> Dyadic:
    """Invert the tent branches of one period, starting from the center.

    ``it`` is the periodic itinerary of a critical orbit; the first letter
    is the critical symbol and every other letter rides a tent branch, so
    the critical value is pinned by halving steps alone.
    """
    syms = it.per
    y = D_HALF
    for t in range(len(syms) - 1, 0, -1):
        if syms[t].kind == "C":
            raise DomainError("orbit revisits a fold inside one period")
        y = y.halve() if syms[t].kind == "L" else D_ONE - y.halve()
    if not (Dyadic(0) <= y <= D_ONE):
        raise InfeasibleError(f"back substitution left [0,1]: {y}")
    return y


def st_bicritical_params(od: OrderData):
    """The unique stunted-tent pair whose bicritical orbit has this data.

    Solved by backward branch substitution from both plateau centers, then
    checked by exact forward simulation; a mismatch flags the order data as
    unrealizable rather than returning a wrong pair.
    """
    it = order_data_to_bicritical_itinerary(od)
    syms = it.per
    two_n = len(syms)
    g = next(t for t, s in enumerate(syms) if s == Symbol(2, "C"))

    y = D_HALF
    for t in range(g - 1, 0, -1):
        y = y.halve() if syms[t].kind == "L" else D_ONE - y.halve()
    v0 = y
    y = D_HALF
    for t in range(two_n - 1, g, -1):
        y = y.halve() if syms[t].kind == "L" else D_ONE - y.halve()
    w0 = y
    for val in (v0, w0):
        if not (Dyadic(0) <= val <= D_ONE):
            raise InfeasibleError(f"back substitution left [0,1] for {od}")

    rec = pair_orbit(st_param(v0, w0), D_HALF, max_steps=4 * two_n + 8)
    ok = (rec.status.kind == "periodic" and rec.status.period == two_n
          and rec.itinerary.normalize() == it.normalize())
    if not ok:
        raise InfeasibleError(
            f"forward simulation at ({v0}, {w0}) does not realize {od}")
    return v0, w0


# ---------------------------------------------------------------------------
# Parametric orbit engine: orbit values as affine functions of one parameter


def _aff_eval(aff, theta: Fraction) -> Fraction:
    return aff[0] * theta + aff[1]


def _aff_zero(aff) -> Optional[Fraction]:
    return None if aff[0] == 0 else -aff[1] / aff[0]


def _step_regions(x, w_edges, plateau_out):
    """Region data for one map application: (d_lo, d_hi, images)."""
    e_lo, e_hi = w_edges
    d_lo = (x[0] - e_lo[0], x[1] - e_lo[1])
    d_hi = (e_hi[0] - x[0], e_hi[1] - x[1])
    images = {
        "L": (2 * x[0], 2 * x[1]),
        "P": plateau_out,
        "R": (-2 * x[0], 2 - 2 * x[1]),
    }
    return d_lo, d_hi, images


def _map_data(lane_applied: int, mode: str, v_fixed=None, w_fixed=None):
    """Plateau edges and plateau output, affine in the scanned parameter.

    ``mode`` is "v" when the scanned parameter is the first plateau height
    (the second is fixed at ``w_fixed``) and "w" for the converse.
    """
    if lane_applied == 1:  # first map, height v
        if mode == "v":
            return ((HALF, F(0)), (-HALF, F(1))), (F(1), F(0))
        h = v_fixed
        return ((F(0), h / 2), (F(0), 1 - h / 2)), (F(0), F(h))
    if mode == "w":
        return ((HALF, F(0)), (-HALF, F(1))), (F(1), F(0))
    h = w_fixed
    return ((F(0), h / 2), (F(0), 1 - h / 2)), (F(0), F(h))


@dataclass(frozen=True)
class StBone:
    """One stunted-tent bone.

    ``v0, w0, v1, v2`` are the canonical left-frame coordinates: for a right
    bone they describe the left bone of the transposed order data, and the
    published geometry is its mirror image across the diagonal.
    """

    side: str
    order_data: OrderData
    v0: Dyadic
    w0: Dyadic
    v1: Dyadic
    v2: Dyadic
    distinguished: tuple = field(default_factory=tuple)

    def primary_vertex(self) -> ParamPoint:
        if self.side == "left":
            return st_param(self.v0, self.w0)
        return st_param(self.w0, self.v0)

    def segments(self):
        """Axis-aligned pieces as (orientation, fixed, lo, hi) fractions."""
        v0, w0 = self.v0.as_fraction(), self.w0.as_fraction()
        v1, v2 = self.v1.as_fraction(), self.v2.as_fraction()
        segs = [("v", v1, w0, F(1)), ("v", v2, w0, F(1)), ("h", w0, v1, v2)]
        if self.side == "right":
            flip = {"v": "h", "h": "v"}
            segs = [(flip[o], c, lo, hi) for o, c, lo, hi in segs]
        return segs

    def boundary_endpoints(self):
        if self.side == "left":
            return (st_param(self.v1, D_ONE), st_param(self.v2, D_ONE))
        return (st_param(D_ONE, self.v1), st_param(D_ONE, self.v2))

    def contains(self, v, w) -> bool:
        vf, wf = F(Dyadic.from_value(v).as_fraction()), F(Dyadic.from_value(w).as_fraction())
        for o, c, lo, hi in self.segments():
            x, y = (vf, wf) if o == "v" else (wf, vf)
            if x == c and lo <= y <= hi:
                return True
        return False

    def to_json(self):
        return {
            "side": self.side,
            "order_data": self.order_data.serialize(),
            "v0": self.v0.serialize(), "w0": self.w0.serialize(),
            "v1": self.v1.serialize(), "v2": self.v2.serialize(),
            "distinguished": [d.to_json() for d in self.distinguished],
        }


def st_bone(od: OrderData, side: str = "left") -> StBone:
    """Exact three-segment bone for the given order data.

    The bone limits come from sliding the first plateau height and tracking
    every orbit value as an affine function of it; the binding constraints
    must be the plateau edges faced by the orbit point nearest the second
    fold, which is asserted.
    """
    if side not in ("left", "right"):
        raise DomainError(f"side must be left or right, got {side!r}")
    work_od = od if side == "left" else od.transpose()
    v0, w0, v1, v2 = _left_bone_limits(work_od)
    return StBone(side, od, v0, w0, v1, v2)


def _left_bone_limits(od: OrderData):
    v0, w0 = st_bicritical_params(od)
    it = order_data_to_bicritical_itinerary(od)
    syms = it.per
    two_n = len(syms)
    g = next(t for t, s in enumerate(syms) if s == Symbol(2, "C"))

    v0f, w0f = v0.as_fraction(), w0.as_fraction()
    lo, hi = F(0), F(1)
    lo_src = hi_src = None
    cur = (F(0), HALF)
    for t in range(1, two_n + 1):
        lane_applied = 1 if t % 2 == 1 else 2
        edges, plateau_out = _map_data(lane_applied, "v", w_fixed=w0f)
        d_lo, d_hi, images = _step_regions(cur, edges, plateau_out)
        dl, dh = _aff_eval(d_lo, v0f), _aff_eval(d_hi, v0f)
        if dl < 0:
            region, active = "L", [(d_lo, "below")]
        elif dh < 0:
            region, active = "R", [(d_hi, "below")]
        else:
            if dl == 0 or dh == 0:
                raise InfeasibleError(
                    f"orbit point sits on a plateau edge at the primary pair for {od}")
            region, active = "P", [(d_lo, "above"), (d_hi, "above")]
        for aff, sense in active:
            z = _aff_zero(aff)
            if z is None:
                continue
            # constraint holds at v0; it fails beyond z on the side where the
            # affine drops below (or rises above) zero
            breaks_high = (aff[0] < 0) if sense == "above" else (aff[0] > 0)
            if breaks_high and z < hi:
                hi, hi_src = z, t
            elif not breaks_high and z > lo:
                lo, lo_src = z, t
        cur = images[region]
    if cur != (F(0), HALF):
        raise InfeasibleError(f"parametric orbit does not close up for {od}")
    if lo_src != g + 1 or hi_src != g + 1:
        raise InfeasibleError(
            f"bone limits for {od} not set by the expected plateau edges "
            f"(lo from step {lo_src}, hi from step {hi_src}, expected {g + 1})")
    return v0, w0, Dyadic.from_value(lo), Dyadic.from_value(hi)


# ---------------------------------------------------------------------------
# Distinguished points along vertical bone segments


@dataclass(frozen=True)
class DistinguishedPoint:
    param: ParamPoint
    kind: str                      # primary | secondary | capture
    depth: int                     # collision step along the scanned orbit
    itinerary2: Itinerary          # itinerary of the other critical point
    jod: Optional[JointOrderData] = None
    span: Optional[tuple] = None   # (lo, hi) fractions for capture plateaus
    segment: str = ""              # v1 | v2 | primary

    def to_json(self):
        out = {
            "v": format(float(self.param.v), ".17g"),
            "w": format(float(self.param.w), ".17g"),
            "kind": self.kind,
            "depth": self.depth,
            "itinerary2": self.itinerary2.serialize(),
            "segment": self.segment,
        }
        if self.jod is not None:
            out["joint_order_data"] = self.jod.serialize()
        if self.span is not None:
            out["span"] = [str(self.span[0]), str(self.span[1])]
        return out


def _vertical_hits(v_fixed: Fraction, w_lo: Fraction, w_hi: Fraction, steps: int):
    """Center collisions of the second fold's orbit along a vertical segment.

    Splits [w_lo, w_hi] into cells of constant branch pattern, propagates
    the orbit affinely in w, and solves each step against the center.
    Returns isolated hits [(w, step)] and plateau hits [(lo, hi, step)].
    """
    cells = [(w_lo, w_hi, [(F(0), HALF)])]
    for t in range(1, steps + 1):
        lane_applied = 2 if t % 2 == 1 else 1
        edges, plateau_out = _map_data(lane_applied, "w", v_fixed=v_fixed)
        new_cells = []
        for lo, hi, vals in cells:
            d_lo, d_hi, images = _step_regions(vals[-1], edges, plateau_out)
            cuts = {lo, hi}
            for aff in (d_lo, d_hi):
                z = _aff_zero(aff)
                if z is not None and lo < z < hi:
                    cuts.add(z)
            bounds = sorted(cuts)
            for a, b in zip(bounds, bounds[1:]):
                mid = (a + b) / 2
                if _aff_eval(d_lo, mid) < 0:
                    region = "L"
                elif _aff_eval(d_hi, mid) < 0:
                    region = "R"
                else:
                    region = "P"
                new_cells.append((a, b, vals + [images[region]]))
        cells = new_cells

    point_hits = {}
    plateau_hits = []
    for lo, hi, vals in cells:
        for t in range(1, steps + 1):
            a, b = vals[t]
            if a == 0:
                if b == HALF:
                    plateau_hits.append((lo, hi, t))
                continue
            z = (HALF - b) / a
            if lo <= z <= hi and (z not in point_hits or t < point_hits[z]):
                point_hits[z] = t

    # once the orbit has landed on a fold it revisits folds forever, so a
    # deeper plateau hit re-covers shallower ones: keep minimal depths only
    plateau_hits.sort(key=lambda h: (h[2], h[0]))
    covered = []
    merged = []
    for lo, hi, t in plateau_hits:
        fresh = [(lo, hi)]
        for clo, chi in covered:
            nxt = []
            for a, b in fresh:
                if chi <= a or b <= clo:
                    nxt.append((a, b))
                else:
                    if a < clo:
                        nxt.append((a, clo))
                    if chi < b:
                        nxt.append((chi, b))
            fresh = nxt
        for a, b in fresh:
            if a < b:
                merged.append((a, b, t))
                covered.append((a, b))
    merged.sort()
    out = []
    for lo, hi, t in merged:
        if out and out[-1][1] == lo and out[-1][2] == t:
            out.append((out.pop()[0], hi, t))
        else:
            out.append((lo, hi, t))
    merged = out
    # a plateau hit swallows point hits of the same or deeper step inside it
    points = [(z, t) for z, t in point_hits.items()
              if not any(lo <= z <= hi and tp <= t for lo, hi, tp in merged)]
    points.sort()
    # a shallower transversal hit can puncture a plateau; the symbol at the
    # shallow step flips across it, so the plateau splits there
    split = []
    for lo, hi, t in merged:
        edges = [lo] + [z for z, _ in points if lo < z < hi] + [hi]
        for a, b in zip(edges, edges[1:]):
            if a < b:
                split.append((a, b, t))
    return points, split


def _dyadic_inside(lo: Fraction, hi: Fraction) -> Dyadic:
    k = 0
    while True:
        j = (lo * 2 ** k).__floor__() + 1
        if F(j, 2 ** k) < hi:
            return Dyadic(j, k)
        k += 1


def classify_st_parameter(v, w, max_steps: int = 4096):
    """Collision type of the critical pair at an exact parameter.

    Returns (kind, data): kind is "primary", "secondary", "capture" or
    "none"; data carries the order data, joint order data, or capture depth.
    """
    p = st_param(v, w)
    rec1 = pair_orbit(p, D_HALF, max_steps=max_steps, start_lane=1)
    rec2 = pair_orbit(p, D_HALF, max_steps=max_steps, start_lane=2)

    def hits(rec, lane, start_lane):
        for t in range(1, len(rec.points)):
            t_lane = start_lane if t % 2 == 0 else 3 - start_lane
            if t_lane == lane and rec.points[t] == D_HALF:
                return t
        return None

    per1 = rec1.status.kind == "periodic"
    per2 = rec2.status.kind == "periodic"
    if per2 and hits(rec2, 1, 2) is not None:
        od = _order_data_from_period(rec2)
        return "primary", od
    if per1 and hits(rec1, 2, 1) is not None:
        od = _order_data_from_period(rec1)
        return "primary", od
    if per1 and per2:
        jod = _joint_from_orbits(rec1, rec2)
        return "secondary", jod
    d21 = hits(rec2, 1, 2) if rec2.status.kind == "eventually_periodic" else None
    if not per2 and d21 is not None:
        return "capture", d21
    d12 = hits(rec1, 2, 1) if rec1.status.kind == "eventually_periodic" else None
    if not per1 and d12 is not None:
        return "capture", d12
    return "none", None


def _order_data_from_period(rec) -> OrderData:
    from .families import _order_data_from_orbit

    pts = rec.points[:rec.status.period]
    return _order_data_from_orbit(pts, rec.start_lane)


def _joint_from_orbits(rec1, rec2) -> JointOrderData:
    """Joint order data from two exact disjoint periodic critical orbits."""
    o1 = rec1.points[:rec1.status.period]
    o2 = rec2.points[:rec2.status.period]
    lane_pts = {1: [], 2: []}   # (value, orbit_id, step)
    for t, x in enumerate(o1):
        lane_pts[1 if t % 2 == 0 else 2].append((x, 1, t))
    for t, x in enumerate(o2):
        lane_pts[2 if t % 2 == 0 else 1].append((x, 2, t))
    if len(set(x for x, _, _ in lane_pts[1])) != len(lane_pts[1]):
        raise DomainError("orbits are not disjoint")
    rank = {}
    for lane in (1, 2):
        for r, (x, oid, t) in enumerate(sorted(lane_pts[lane])):
            rank[(oid, t)] = r + 1
    N = len(lane_pts[1])
    sigma, tau = [0] * N, [0] * N
    for lane, perm in ((1, sigma), (2, tau)):
        for x, oid, t in lane_pts[lane]:
            length = len(o1) if oid == 1 else len(o2)
            perm[rank[(oid, t)] - 1] = rank[(oid, (t + 1) % length)]
    jod = JointOrderData(tuple(sigma), tuple(tau))
    if not check_admissible_joint(jod):
        raise InfeasibleError("extracted joint order data fails admissibility")
    return jod


def st_distinguished_points(bone: StBone, m: int):
    """Isolated distinguished points plus capture plateaus, ordered along
    the bone from the first boundary endpoint to the second.

    Vertical segments are scanned exactly (open at the corner, where the
    horizontal capture continuum takes over); the primary vertex sits in the
    middle.  The itinerary ordering along each vertical is verified to be
    strictly monotone.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    work = bone if bone.side == "left" else st_bone(bone.order_data.transpose(), "left")
    v0f, w0f = work.v0.as_fraction(), work.w0.as_fraction()
    records = []

    for seg_name, v_edge in (("v1", work.v1), ("v2", work.v2)):
        points, plateaus = _vertical_hits(v_edge.as_fraction(), w0f, F(1), 2 * m)
        seg_records = []
        for z, t in points:
            if z == w0f:
                continue  # the corner belongs to the horizontal continuum
            if t % 2 == 0 and t > 2 * m:
                continue
            wd = Dyadic.from_value(z)
            kind, data = classify_st_parameter(v_edge, wd)
            rec2 = pair_orbit(st_param(v_edge, wd), D_HALF, start_lane=2,
                              max_steps=4096)
            seg_records.append(DistinguishedPoint(
                st_param(v_edge, wd), kind, t, rec2.itinerary,
                jod=data if kind == "secondary" else None,
                segment=seg_name))
        for lo, hi, t in plateaus:
            lo_eff = max(lo, w0f)
            if hi <= w0f:
                continue
            rep = _dyadic_inside(lo_eff, hi)
            kind, data = classify_st_parameter(v_edge, rep)
            rec2 = pair_orbit(st_param(v_edge, rep), D_HALF, start_lane=2,
                              max_steps=4096)
            seg_records.append(DistinguishedPoint(
                st_param(v_edge, rep), kind, t, rec2.itinerary,
                jod=data if kind == "secondary" else None,
                span=(lo_eff, hi), segment=seg_name))
        seg_records.sort(key=_record_w)
        _check_monotone(seg_records)
        records.append(seg_records)

    rec2 = pair_orbit(work.primary_vertex(), D_HALF, start_lane=2, max_steps=4096)
    primary = DistinguishedPoint(work.primary_vertex(), "primary",
                                 0, rec2.itinerary, segment="primary")

    ordered = records[0][::-1] + [primary] + records[1]
    if bone.side == "right":
        ordered = [_mirror_distinguished(d) for d in ordered]
    return ordered


def _record_w(d: DistinguishedPoint) -> Fraction:
    return Dyadic.from_value(d.param.w).as_fraction()


def _check_monotone(seg_records):
    from .symbolic import compare_itineraries

    for a, b in zip(seg_records, seg_records[1:]):
        if compare_itineraries(a.itinerary2, b.itinerary2) != -1:
            raise InfeasibleError(
                "distinguished points out of itinerary order along a segment")


def _mirror_distinguished(d: DistinguishedPoint) -> DistinguishedPoint:
    p = st_param(d.param.w, d.param.v)
    return DistinguishedPoint(
        p, d.kind, d.depth, _mirror_itinerary(d.itinerary2),
        jod=None if d.jod is None else d.jod.transpose(),
        span=d.span, segment=d.segment)


def st_secondary_intersection(jod: JointOrderData) -> ParamPoint:
    """The unique parameter pair realizing this joint order data.

    Both critical itineraries follow from the joint data; each plateau
    height then comes from a backward branch solve, and the result is
    verified by exact simulation before being returned.
    """
    if not check_admissible_joint(jod):
        raise DomainError(f"inadmissible joint order data {jod}")
    it1, it2 = joint_itineraries(jod)
    v = _backward_from_center(it1)
    w = _backward_from_center(it2)
    p = st_param(v, w)
    rec1 = pair_orbit(p, D_HALF, start_lane=1, max_steps=4096)
    rec2 = pair_orbit(p, D_HALF, start_lane=2, max_steps=4096)
    ok = (rec1.status.kind == "periodic" and rec2.status.kind == "periodic"
          and rec1.itinerary.normalize() == it1.normalize()
          and rec2.itinerary.normalize() == it2.normalize())
    if not ok:
        raise InfeasibleError(f"forward check failed for joint data {jod}")
    extracted = _joint_from_orbits(rec1, rec2)
    if extracted != jod:
        raise InfeasibleError(
            f"realized interleaving {extracted} differs from requested {jod}")
    return p


def st_crossings(left: StBone, right: StBone):
    """Exact crossings of a left and a right bone with classifications.

    Returns a list of (ParamPoint, kind, data); axis-aligned segments make
    the geometry a pure interval computation.
    """
    if left.side == right.side:
        raise DomainError("need one left and one right bone")
    pts = set()
    for o1, c1, lo1, hi1 in left.segments():
        for o2, c2, lo2, hi2 in right.segments():
            if o1 == o2:
                if c1 == c2 and max(lo1, lo2) < min(hi1, hi2):
                    raise InfeasibleError("overlapping parallel bone segments")
                continue
            (vo, vc, vlo, vhi), (ho, hc, hlo, hhi) = (
                ((o1, c1, lo1, hi1), (o2, c2, lo2, hi2)) if o1 == "v"
                else ((o2, c2, lo2, hi2), (o1, c1, lo1, hi1)))
            if hlo <= vc <= hhi and vlo <= hc <= vhi:
                pts.add((vc, hc))
    out = []
    for vf, wf in sorted(pts):
        v, w = Dyadic.from_value(vf), Dyadic.from_value(wf)
        kind, data = classify_st_parameter(v, w)
        out.append((st_param(v, w), kind, data))
    return out
