"""Numerically traced bones in the logistic-composition parameter square.

A bone is the zero set of G(v,w) = (second fold iterate condition); it is
traced by pseudo-arclength continuation with an exact-chain-rule Jacobian,
seeded at its two boundary endpoints on w = 1 (left bones).  Right bones
are mirror images of left bones with transposed order data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DomainError, TraceError
from .families import ParamPoint, q_param
from .symbolic import (
    JointOrderData, OrderData, Symbol, check_admissible,
    check_admissible_joint, order_data_to_bicritical_itinerary,
)

TOL_CORR = 1e-11
ANGLE_MIN = 1e-3


def _orbit_and_grads(v, w, steps, start_lane=1):
    """Fold orbit with d/dv and d/dw propagated by the chain rule."""
    x, xv, xw = 0.5, 0.0, 0.0
    lane = start_lane
    xs, xvs, xws = [x], [xv], [xw]
    for _ in range(steps):
        p = v if lane == 1 else w
        slope = 4.0 * p * (1.0 - 2.0 * x)
        base = 4.0 * x * (1.0 - x)
        if lane == 1:
            xv, xw = base + slope * xv, slope * xw
        else:
            xv, xw = slope * xv, base + slope * xw
        x = 4.0 * p * x * (1.0 - x)
        lane = 3 - lane
        xs.append(x)
        xvs.append(xv)
        xws.append(xw)
    return xs, xvs, xws


def _periodicity_data(v, w, n, start_lane=1):
    xs, xvs, xws = _orbit_and_grads(v, w, 2 * n, start_lane)
    return xs[-1] - 0.5, xvs[-1], xws[-1], xs


def _minimal_period_ok(xs, n):
    return all(abs(xs[2 * d] - 0.5) > 10 * TOL_CORR
               for d in range(1, n) if n % d == 0)


def _order_data_along(xs, n, start_lane=1) -> Optional[OrderData]:
    from .families import _order_data_from_orbit

    pts = xs[:2 * n]
    for parity in (0, 1):
        vals = sorted(pts[parity::2])
        if any(b - a < 1e-9 for a, b in zip(vals, vals[1:])):
            return None
    od = _order_data_from_orbit(pts, start_lane)
    return od if check_admissible(od) else None


@dataclass(frozen=True)
class QVertex:
    index: float          # fractional polyline position
    param: tuple          # (v, w)
    kind: str             # primary | secondary | boundary
    data: object = None   # OrderData, JointOrderData or None

    def to_json(self):
        out = {"index": self.index,
               "v": format(self.param[0], ".17g"),
               "w": format(self.param[1], ".17g"),
               "kind": self.kind}
        if self.data is not None:
            out["data"] = self.data.serialize()
        return out


@dataclass
class QBone:
    side: str
    order_data: OrderData
    polyline: np.ndarray            # (N, 2) parameter points
    vertices: list
    meta: dict = field(default_factory=dict)

    def primary_vertex(self) -> Optional[QVertex]:
        for vx in self.vertices:
            if vx.kind == "primary":
                return vx
        return None

    def to_json(self):
        return {
            "side": self.side,
            "order_data": self.order_data.serialize(),
            "polyline": [[format(v, ".17g"), format(w, ".17g")]
                         for v, w in self.polyline.tolist()],
            "vertices": [vx.to_json() for vx in self.vertices],
            "meta": {k: (format(x, ".17g") if isinstance(x, float) else x)
                     for k, x in self.meta.items()},
        }

    def polyline_csv(self) -> str:
        lines = ["v,w"]
        for v, w in self.polyline.tolist():
            lines.append(f"{format(v, '.17g')},{format(w, '.17g')}")
        return "\n".join(lines) + "\n"


def q_boundary_endpoints(od: OrderData, side: str = "left"):
    """The bone's two boundary roots on w = 1 (v = 1 for right bones).

    Scans the fold's period condition for sign changes, polishes each root,
    and keeps exactly those with the right exact period and order data.
    """
    if not check_admissible(od):
        raise DomainError(f"inadmissible order data {od}")
    work = od if side == "left" else od.transpose()
    n = work.size
    res = 2 ** 14 if n <= 4 else 2 ** 17
    grid = np.linspace(1e-6, 1.0 - 1e-6, res)

    def G(v):
        return _periodicity_data(v, 1.0, n)[0]

    vals = np.array([G(v) for v in grid])
    roots = []
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    for i in idx:
        a, b = grid[i], grid[i + 1]
        fa = vals[i]
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = G(m)
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
        v = 0.5 * (a + b)
        for _ in range(6):
            g, gv, _, _ = _periodicity_data(v, 1.0, n)
            if gv == 0:
                break
            v -= g / gv
        g, _, _, xs = _periodicity_data(v, 1.0, n)
        if abs(g) > 1e-9 or not _minimal_period_ok(xs, n):
            continue
        if _order_data_along(xs, n) != work:
            continue
        if not any(abs(v - r) < 1e-9 for r in roots):
            roots.append(v)
    if len(roots) != 2:
        raise TraceError(
            f"expected 2 boundary roots for {od} ({side}), found {len(roots)}")
    return tuple(sorted(roots))


def _newton2(F, u0, tol=TOL_CORR, max_iter=12):
    """Damped 2x2 Newton; F(u) -> (f, J). Returns solution or None."""
    u = np.array(u0, dtype=float)
    for _ in range(max_iter):
        if not (np.isfinite(u).all() and -0.5 <= u[0] <= 1.5 and -0.5 <= u[1] <= 1.5):
            return None
        f, J = F(u)
        det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
        if det == 0 or not np.isfinite(det):
            return None
        dv = (f[0] * J[1][1] - f[1] * J[0][1]) / det
        dw = (J[0][0] * f[1] - J[1][0] * f[0]) / det
        u = u - np.array([dv, dw])
        if abs(dv) + abs(dw) < 1e-14:
            break
    if not (np.isfinite(u).all() and -0.5 <= u[0] <= 1.5 and -0.5 <= u[1] <= 1.5):
        return None
    f, _ = F(u)
    return u if max(abs(f[0]), abs(f[1])) < 10 * tol else None


def q_trace_bone(od: OrderData, side: str = "left",
                 step_init: float = 1e-3, max_points: int = 200_000) -> QBone:
    """Pseudo-arclength trace of one bone from boundary to boundary.

    The tangent comes from the 1x2 Jacobian of the period condition; the
    corrector solves the period condition plus the arclength constraint.
    The primary vertex is marked where the structurally tracked orbit point
    crosses the second fold.
    """
    if side not in ("left", "right"):
        raise DomainError(f"bad side {side!r}")
    work = od if side == "left" else od.transpose()
    n = work.size
    itin = order_data_to_bicritical_itinerary(work)
    g_idx = next(t for t, s in enumerate(itin.per) if s == Symbol(2, "C"))

    va, vb = q_boundary_endpoints(work, "left")
    u = np.array([va, 1.0])
    pts = [tuple(u)]
    crossings = []
    g, gv, gw, xs = _periodicity_data(u[0], u[1], n)
    prev_mark = xs[g_idx] - 0.5
    norm = math.hypot(gv, gw)
    if norm == 0:
        raise TraceError("singular Jacobian at the boundary seed")
    tangent = np.array([-gw, gv]) / norm
    if tangent[1] > 0:
        tangent = -tangent
    if tangent[1] == 0:
        raise TraceError("bone is tangent to the boundary at its endpoint")

    h = step_init
    streak = 0
    failures = 0
    max_resid = 0.0
    while len(pts) < max_points:
        pred = u + h * tangent

        def F(q):
            gq, gvq, gwq, _ = _periodicity_data(q[0], q[1], n)
            f = (gq, float(tangent @ (q - pred)))
            J = ((gvq, gwq), (tangent[0], tangent[1]))
            return f, J

        sol = _newton2(F, pred)
        ok = sol is not None
        if ok:
            g, gv, gw, xs = _periodicity_data(sol[0], sol[1], n)
            ok = abs(g) < TOL_CORR and _minimal_period_ok(xs, n)
        if ok and n > 1:
            # the zero set of G carries every bone of this period: a branch
            # jump shows up as a change of order data and is rejected
            ok = _order_data_along(xs, n) == work
        if ok and not (-1e-9 <= sol[0] <= 1 + 1e-9):
            raise TraceError(f"bone left the square sideways at {sol}")
        if ok and sol[1] < -1e-9:
            raise TraceError(f"bone left the square downward at {sol}")
        if not ok:
            h *= 0.5
            streak = 0
            failures += 1
            if h < 1e-8:
                raise TraceError(
                    f"continuation stalled for {od} after {len(pts)} points")
            continue

        if sol[1] >= 1.0 and len(pts) > 1:
            v_end = _boundary_return(sol[0], n)
            pts.append((v_end, 1.0))
            break

        mark = xs[g_idx] - 0.5
        if prev_mark * mark < 0:
            vertex = _locate_primary(np.array(pts[-1]), np.array(sol),
                                     tangent, n, g_idx)
            if vertex is None:
                raise TraceError(f"primary vertex polish failed for {od}")
            crossings.append((len(pts) - 0.5, tuple(vertex)))
        prev_mark = mark
        max_resid = max(max_resid, abs(g))

        norm = math.hypot(gv, gw)
        new_tangent = np.array([-gw, gv]) / norm
        if float(new_tangent @ tangent) < 0:
            new_tangent = -new_tangent
        tangent = new_tangent
        u = np.array(sol)
        pts.append(tuple(u))
        streak += 1
        if streak >= 5:
            h = min(2 * h, step_init)
            streak = 0
    else:
        raise TraceError(f"step budget exhausted for {od}")

    poly = np.array(pts)
    vertices = [QVertex(0.0, (float(poly[0][0]), float(poly[0][1])), "boundary", od),
                QVertex(len(poly) - 1.0, (float(poly[-1][0]), float(poly[-1][1])),
                        "boundary", od)]
    for idx, param in crossings:
        vertices.append(QVertex(idx, (float(param[0]), float(param[1])),
                                "primary", od))
    meta = {"points": len(poly), "failures": failures,
            "max_residual": max_resid, "step_init": step_init}
    if side == "right":
        poly = poly[:, ::-1].copy()
        vertices = [QVertex(vx.index, (vx.param[1], vx.param[0]), vx.kind, vx.data)
                    for vx in vertices]
    return QBone(side, od, poly, sorted(vertices, key=lambda vx: vx.index), meta)


def _boundary_return(v_seed, n):
    v = v_seed
    for _ in range(60):
        g, gv, _, _ = _periodicity_data(v, 1.0, n)
        if gv == 0 or abs(g) < 1e-15:
            break
        v -= g / gv
    return v


def _bicritical_newton(u0, n, g_idx):
    def F(q):
        xs_, xvs, xws = _orbit_and_grads(q[0], q[1], 2 * n)
        f = (xs_[2 * n] - 0.5, xs_[g_idx] - 0.5)
        J = ((xvs[2 * n], xws[2 * n]), (xvs[g_idx], xws[g_idx]))
        return f, J

    return _newton2(F, u0)


def _locate_primary(ua, ub, tangent, n, g_idx):
    """Bisect the fold-crossing mark between two curve points, then polish.

    Each probe point is pulled back onto the bone with the arclength
    corrector before its mark is read, so the bisection stays on the curve
    even where the bicritical Newton alone would wander off.
    """
    def on_curve(seed):
        def F(q):
            gq, gvq, gwq, _ = _periodicity_data(q[0], q[1], n)
            return ((gq, float(tangent @ (q - seed))),
                    ((gvq, gwq), (tangent[0], tangent[1])))
        return _newton2(F, seed)

    def mark(u):
        xs, _, _ = _orbit_and_grads(u[0], u[1], 2 * n)
        return xs[g_idx] - 0.5

    ma = mark(ua)
    for _ in range(60):
        mid = on_curve(0.5 * (ua + ub))
        if mid is None:
            break
        mm = mark(mid)
        if ma * mm <= 0:
            ub = mid
        else:
            ua, ma = mid, mm
        if np.hypot(*(ub - ua)) < 1e-12:
            break
    seed = 0.5 * (ua + ub)
    polished = _bicritical_newton(seed, n, g_idx)
    if polished is not None:
        return polished
    g, _, _, xs = _periodicity_data(seed[0], seed[1], n)
    if abs(g) < 1e-9 and abs(xs[g_idx] - 0.5) < 1e-9:
        return seed
    return None


@lru_cache(maxsize=None)
def _traced(od_key, side, step_init):
    od = OrderData.parse(od_key)
    return q_trace_bone(od, side, step_init)


def traced_bone(od: OrderData, side: str = "left",
                step_init: float = 1e-3) -> QBone:
    """Cached trace; bones are immutable once built."""
    return _traced(od.serialize(), side, step_init)


def q_primary_intersection(od: OrderData, step_init: float = 1e-3) -> ParamPoint:
    """Unique bicritical parameter with this order data, Newton-polished."""
    bone = traced_bone(od, "left", step_init)
    vx = bone.primary_vertex()
    if vx is None:
        raise TraceError(f"trace of {od} did not mark a primary vertex")
    n = od.size
    xs, _, _ = _orbit_and_grads(vx.param[0], vx.param[1], 2 * n)
    found = _order_data_along(xs, n)
    if found != od:
        raise TraceError(f"primary vertex of {od} verified as {found}")
    return q_param(*vx.param)


def _segments_cross(A, B, chunk=256):
    """Indices and points where two polylines cross (generic positions)."""
    a0, a1 = A[:-1], A[1:]
    out = []
    for start in range(0, len(B) - 1, chunk):
        b0 = B[start:start + chunk]
        b1 = B[start + 1:start + chunk + 1]
        m = len(b1)
        b0 = b0[:m]
        r = a1 - a0
        s = b1 - b0
        qp = b0[None, :, :] - a0[:, None, :]
        rxs = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
        qpxr = qp[:, :, 0] * r[:, None, 1] - qp[:, :, 1] * r[:, None, 0]
        qpxs = qp[:, :, 0] * s[None, :, 1] - qp[:, :, 1] * s[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = qpxs / rxs
            uu = qpxr / rxs
        hit = (rxs != 0) & (t >= 0) & (t <= 1) & (uu >= 0) & (uu <= 1)
        for i, j in zip(*np.nonzero(hit)):
            p = a0[i] + t[i, j] * (a1[i] - a0[i])
            out.append((i, start + j, tuple(p)))
    return out


@dataclass(frozen=True)
class QIntersection:
    param: ParamPoint
    kind: str             # primary | secondary
    data: object          # OrderData for primary, JointOrderData otherwise
    index_a: float        # fractional polyline index on the left bone
    index_b: float        # and on the right bone


def q_secondary_intersections(left: QBone, right: QBone):
    """Crossing points of a left and right traced bone, classified, polished.

    Each geometric seed is polished on the joint periodicity system; the
    bicritical crossing (if any) is reported as primary, the rest carry
    their joint order data; every joint datum appears exactly once.
    """
    if left.side != "left" or right.side != "right":
        raise DomainError("expected a left and a right bone")
    m, n = left.order_data.size, right.order_data.size
    seeds = _segments_cross(left.polyline, right.polyline)
    results = []
    for ia, ib, seed in seeds:
        def F(q):
            g1, g1v, g1w, _ = _periodicity_data(q[0], q[1], m, start_lane=1)
            g2, g2v, g2w, _ = _periodicity_data(q[0], q[1], n, start_lane=2)
            return (g1, g2), ((g1v, g1w), (g2v, g2w))

        sol = _newton2(F, seed)
        if sol is None:
            raise TraceError(f"joint polish failed at seed {seed}")
        v, w = float(sol[0]), float(sol[1])
        if any(abs(v - r.param.v) < 1e-9 and abs(w - r.param.w) < 1e-9
               for r in results):
            continue
        xs1, _, _ = _orbit_and_grads(v, w, 2 * m, 1)
        xs2, _, _ = _orbit_and_grads(v, w, 2 * n, 2)
        o1 = xs1[:2 * m]
        o2 = xs2[:2 * n]
        shared = min(abs(a - b)
                     for t1, a in enumerate(o1) for t2, b in enumerate(o2)
                     if t1 % 2 != t2 % 2)  # same lane: opposite step parity
        if shared < 1e-7:
            if left.order_data != right.order_data:
                raise TraceError("bicritical crossing of different order data")
            results.append(QIntersection(q_param(v, w), "primary",
                                         left.order_data, ia + 0.5, ib + 0.5))
            continue
        jod = _joint_from_float_orbits(o1, o2)
        if any(r.kind == "secondary" and r.data == jod for r in results):
            raise TraceError(f"joint order data {jod} found twice")
        results.append(QIntersection(q_param(v, w), "secondary", jod,
                                     ia + 0.5, ib + 0.5))
    results.sort(key=lambda r: (r.param.v, r.param.w))
    return results


def _joint_from_float_orbits(o1, o2) -> JointOrderData:
    lane_pts = {1: [], 2: []}
    for t, x in enumerate(o1):
        lane_pts[1 if t % 2 == 0 else 2].append((x, 1, t))
    for t, x in enumerate(o2):
        lane_pts[2 if t % 2 == 0 else 1].append((x, 2, t))
    rank = {}
    for lane in (1, 2):
        ordered = sorted(lane_pts[lane])
        gaps = [b[0] - a[0] for a, b in zip(ordered, ordered[1:])]
        if gaps and min(gaps) < 1e-9:
            raise TraceError("orbit points too close to rank reliably")
        for r, (x, oid, t) in enumerate(ordered):
            rank[(oid, t)] = r + 1
    N = len(lane_pts[1])
    sigma, tau = [0] * N, [0] * N
    for lane, perm in ((1, sigma), (2, tau)):
        for x, oid, t in lane_pts[lane]:
            length = len(o1) if oid == 1 else len(o2)
            perm[rank[(oid, t)] - 1] = rank[(oid, (t + 1) % length)]
    jod = JointOrderData(tuple(sigma), tuple(tau))
    if not check_admissible_joint(jod):
        raise TraceError("extracted joint order data fails admissibility")
    return jod


def _tangent_at(bone: QBone, v, w):
    work = bone.order_data if bone.side == "left" else bone.order_data.transpose()
    n = work.size
    if bone.side == "left":
        _, gv, gw, _ = _periodicity_data(v, w, n, start_lane=1)
    else:
        _, gw, gv, _ = _periodicity_data(w, v, n, start_lane=1)
    norm = math.hypot(gv, gw)
    if norm == 0:
        raise DomainError("singular Jacobian at the crossing")
    return (-gw / norm, gv / norm)


def transversality_check(a: QBone, b: QBone, crossing: ParamPoint) -> float:
    """Unsigned angle between the two bone tangent lines at a crossing."""
    if a.side == b.side and a.order_data == b.order_data:
        raise DomainError("a bone cannot be checked against itself")
    v, w = float(crossing.v), float(crossing.w)
    for bone in (a, b):
        work = bone.order_data if bone.side == "left" else bone.order_data.transpose()
        vv, ww = (v, w) if bone.side == "left" else (w, v)
        g, _, _, _ = _periodicity_data(vv, ww, work.size, start_lane=1)
        if abs(g) > 1e-7:
            raise DomainError("crossing does not lie on both bones")
    ta = _tangent_at(a, v, w)
    tb = _tangent_at(b, v, w)
    cross = abs(ta[0] * tb[1] - ta[1] * tb[0])
    dot = abs(ta[0] * tb[0] + ta[1] * tb[1])
    return math.atan2(cross, dot)


def polyline_self_intersections(poly: np.ndarray):
    """Non-adjacent segment crossings of one polyline (should be empty)."""
    A = np.asarray(poly)
    hits = _segments_cross(A, A)
    out = []
    for i, j, p in hits:
        if abs(i - j) <= 1:
            continue
        out.append((i, j, p))
    return out
