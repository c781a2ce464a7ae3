"""Skeleton cell complexes, the combinatorial vertex correspondence between
the two parameter spaces, isentrope extraction and refinement audits.

The n-skeleton is the union of all bones of period up to 2n together with
the boundary square; vertices are bone endpoints, primary and secondary
intersections, and the four corners.  Faces are counted by rasterizing the
skeleton and labeling the complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .entropy import EntropyGrid, LOG4, entropy_grid
from .errors import DomainError, InfeasibleError
from .families import Dyadic
from .q_bones import q_secondary_intersections, traced_bone
from .st_bones import StBone, st_bone, st_crossings
from .symbolic import admissible_order_data


# ---------------------------------------------------------------------------
# Connected component labeling (run-based union-find; 4 or 8 adjacency)


def label_components(mask: np.ndarray, connectivity: int = 4):
    """Label True cells of a 2-D mask; returns (count, labels) with 0 = empty."""
    if connectivity not in (4, 8):
        raise DomainError("connectivity must be 4 or 8")
    rows, cols = mask.shape
    labels = np.zeros((rows, cols), dtype=np.int32)
    parent = [0]

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    prev_runs = []
    next_label = 1
    reach = 0 if connectivity == 4 else 1
    for r in range(rows):
        row = mask[r]
        idx = np.flatnonzero(np.diff(np.concatenate([[0], row.view(np.int8), [0]])))
        runs = [(idx[i], idx[i + 1] - 1) for i in range(0, len(idx), 2)]
        labeled_runs = []
        for a, b in runs:
            lab = 0
            for (pa, pb, plab) in prev_runs:
                if pa <= b + reach and pb >= a - reach:
                    if lab == 0:
                        lab = plab
                    else:
                        union(lab, plab)
            if lab == 0:
                lab = next_label
                parent.append(lab)
                next_label += 1
            labels[r, a:b + 1] = lab
            labeled_runs.append((a, b, lab))
        prev_runs = labeled_runs
    if next_label == 1:
        return 0, labels
    roots = {}
    remap = np.zeros(next_label, dtype=np.int32)
    for lab in range(1, next_label):
        root = find(lab)
        if root not in roots:
            roots[root] = len(roots) + 1
        remap[lab] = roots[root]
    return len(roots), remap[labels]


# ---------------------------------------------------------------------------
# Skeleton complexes


@dataclass(frozen=True)
class SkelVertex:
    id: int
    param: tuple          # (v, w) floats
    label: tuple          # ("corner", i) | ("endpoint", od, side, which)
                          # | ("primary", od) | ("secondary", jod)


@dataclass(frozen=True)
class SkelEdge:
    id: int
    v_from: int
    v_to: int
    carrier: tuple        # ("bone", od, side) | ("boundary",)


@dataclass
class SkeletonComplex:
    family: str
    n: int
    bones: dict
    vertices: list
    edges: list
    face_count: int       # bounded faces only
    raster: int

    @property
    def euler(self) -> int:
        return len(self.vertices) - len(self.edges) + self.face_count + 1

    def vertex_by_label(self):
        out = {}
        for vx in self.vertices:
            if vx.label in out:
                raise InfeasibleError(f"duplicate vertex label {vx.label}")
            out[vx.label] = vx
        return out

    def to_json(self):
        return {
            "family": self.family,
            "n": self.n,
            "vertices": [
                {"id": vx.id, "v": format(vx.param[0], ".17g"),
                 "w": format(vx.param[1], ".17g"),
                 "label": [str(x) for x in vx.label]}
                for vx in self.vertices],
            "edges": [
                {"id": e.id, "from": e.v_from, "to": e.v_to,
                 "carrier": [str(x) for x in e.carrier]}
                for e in self.edges],
            "faces": self.face_count,
            "euler": self.euler,
        }


def _od_key(od) -> str:
    return od.serialize()


def _all_order_data(n: int):
    out = []
    for k in range(1, n + 1):
        out.extend(admissible_order_data(k))
    return out


def _st_bone_position(bone: StBone, v: Fraction, w: Fraction) -> Fraction:
    """Arclength along the bone path from its first boundary endpoint."""
    segs = bone.segments()
    if bone.side == "left":
        v1, v2, w0 = segs[0][1], segs[1][1], segs[2][1]
        if v == v1:
            return 1 - w
        if w == w0:
            return (1 - w0) + (v - v1)
        if v == v2:
            return (1 - w0) + (v2 - v1) + (w - w0)
    else:
        w1, w2, v0 = segs[0][1], segs[1][1], segs[2][1]
        if w == w1:
            return 1 - v
        if v == v0:
            return (1 - v0) + (w - w1)
        if w == w2:
            return (1 - v0) + (w2 - w1) + (v - v0)
    raise DomainError("point not on bone")


def _perimeter_position(v: float, w: float) -> float:
    eps = 1e-9
    if abs(w) < eps:
        return v
    if abs(v - 1) < eps:
        return 1 + w
    if abs(w - 1) < eps:
        return 3 - v
    if abs(v) < eps:
        return 4 - w
    raise DomainError(f"({v}, {w}) is not on the boundary")


class _VertexPool:
    def __init__(self, quantum=1e-7):
        self.quantum = quantum
        self.by_key = {}
        self.vertices = []

    def add(self, param, label):
        key = (round(param[0] / self.quantum), round(param[1] / self.quantum))
        if key in self.by_key:
            vx = self.by_key[key]
            if vx.label != label:
                raise InfeasibleError(
                    f"vertex at {vx.param} carries labels {vx.label} and {label}")
            return vx
        vx = SkelVertex(len(self.vertices), (float(param[0]), float(param[1])), label)
        self.by_key[key] = vx
        self.vertices.append(vx)
        return vx


def build_skeleton(family: str, n: int, raster: Optional[int] = None,
                   step_init: float = 1e-3) -> SkeletonComplex:
    """Assemble the n-skeleton cell complex for one family."""
    if raster is None:
        raster = 2048 if n <= 2 else 8192  # faces pack tightly near (1,1)
    if family == "st":
        if n > 5:
            raise DomainError("stunted skeletons supported for n <= 5")
        return _build_st(n, raster)
    if family == "q":
        if n > 4:
            raise DomainError("traced skeletons supported for n <= 4")
        return _build_q(n, raster, step_init)
    raise DomainError(f"unknown family {family!r}")


def _build_st(n: int, raster: int) -> SkeletonComplex:
    ods = _all_order_data(n)
    bones = {}
    for od in ods:
        for side in ("left", "right"):
            bones[(_od_key(od), side)] = st_bone(od, side)

    pool = _VertexPool()
    for i, corner in enumerate([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]):
        pool.add(corner, ("corner", i))

    on_bone = {key: [] for key in bones}
    for (key, side), bone in bones.items():
        eps = bone.boundary_endpoints()
        for which, p in enumerate(eps):
            vf, wf = Dyadic.from_value(p.v).as_fraction(), Dyadic.from_value(p.w).as_fraction()
            vx = pool.add((float(p.v), float(p.w)), ("endpoint", key, side, which))
            on_bone[(key, side)].append((vf, wf, vx))

    for kl, odl in [(_od_key(od), od) for od in ods]:
        for kr, odr in [(_od_key(od), od) for od in ods]:
            left, right = bones[(kl, "left")], bones[(kr, "right")]
            for p, kind, data in st_crossings(left, right):
                vf = Dyadic.from_value(p.v).as_fraction()
                wf = Dyadic.from_value(p.w).as_fraction()
                if kind == "primary":
                    label = ("primary", _od_key(data))
                elif kind == "secondary":
                    label = ("secondary", data.serialize())
                else:
                    raise InfeasibleError(
                        f"bone crossing at ({p.v}, {p.w}) classified {kind}")
                vx = pool.add((float(p.v), float(p.w)), label)
                on_bone[(kl, "left")].append((vf, wf, vx))
                on_bone[(kr, "right")].append((vf, wf, vx))

    edges = []
    for (key, side), entries in on_bone.items():
        bone = bones[(key, side)]
        seen = {}
        for vf, wf, vx in entries:
            seen[vx.id] = (_st_bone_position(bone, vf, wf), vx)
        chain = sorted(seen.values(), key=lambda t: t[0])
        for (ta, va), (tb, vb) in zip(chain, chain[1:]):
            edges.append(SkelEdge(len(edges), va.id, vb.id, ("bone", key, side)))

    _add_boundary_edges(pool, edges)
    segs = [seg for bone in bones.values() for seg in _st_segments_float(bone)]
    faces = _face_count(segs, raster)
    return SkeletonComplex("st", n, bones, pool.vertices, edges, faces, raster)


def _st_segments_float(bone: StBone):
    out = []
    for o, c, lo, hi in bone.segments():
        if o == "v":
            out.append(((float(c), float(lo)), (float(c), float(hi))))
        else:
            out.append(((float(lo), float(c)), (float(hi), float(c))))
    return out


def _build_q(n: int, raster: int, step_init: float) -> SkeletonComplex:
    ods = _all_order_data(n)
    bones = {}
    for od in ods:
        for side in ("left", "right"):
            bones[(_od_key(od), side)] = traced_bone(od, side, step_init)

    pool = _VertexPool()
    for i, corner in enumerate([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]):
        pool.add(corner, ("corner", i))

    on_bone = {key: [] for key in bones}
    for (key, side), bone in bones.items():
        first = bone.polyline[0]
        last = bone.polyline[-1]
        order = [(tuple(first), 0.0, 0), (tuple(last), len(bone.polyline) - 1.0, 1)]
        order.sort(key=lambda t: t[0])
        for which, (param, idx, _) in enumerate(sorted(order, key=lambda t: t[0])):
            vx = pool.add(param, ("endpoint", key, side, which))
            on_bone[(key, side)].append((idx, vx))

    for kl in [_od_key(od) for od in ods]:
        for kr in [_od_key(od) for od in ods]:
            left, right = bones[(kl, "left")], bones[(kr, "right")]
            for rec in q_secondary_intersections(left, right):
                if rec.kind == "primary":
                    label = ("primary", kl)
                else:
                    label = ("secondary", rec.data.serialize())
                vx = pool.add((rec.param.v, rec.param.w), label)
                on_bone[(kl, "left")].append((rec.index_a, vx))
                on_bone[(kr, "right")].append((rec.index_b, vx))

    edges = []
    for (key, side), entries in on_bone.items():
        seen = {}
        for idx, vx in entries:
            seen[vx.id] = (idx, vx)
        chain = sorted(seen.values(), key=lambda t: t[0])
        for (ia, va), (ib, vb) in zip(chain, chain[1:]):
            edges.append(SkelEdge(len(edges), va.id, vb.id, ("bone", key, side)))

    _add_boundary_edges(pool, edges)
    segs = []
    for bone in bones.values():
        poly = bone.polyline
        segs.extend((tuple(poly[i]), tuple(poly[i + 1])) for i in range(len(poly) - 1))
    faces = _face_count(segs, raster)
    return SkeletonComplex("q", n, bones, pool.vertices, edges, faces, raster)


def _add_boundary_edges(pool: _VertexPool, edges: list):
    boundary = []
    for vx in pool.vertices:
        v, w = vx.param
        eps = 1e-9
        if min(v, w) < eps or max(v, w) > 1 - eps:
            boundary.append((_perimeter_position(v, w), vx))
    boundary.sort(key=lambda t: t[0])
    for (pa, va), (pb, vb) in zip(boundary, boundary[1:]):
        edges.append(SkelEdge(len(edges), va.id, vb.id, ("boundary",)))
    edges.append(SkelEdge(len(edges), boundary[-1][1].id, boundary[0][1].id,
                          ("boundary",)))


def _face_count(segments, raster: int, min_area: int = 4) -> int:
    """Bounded complement components of the skeleton on a fine raster.

    Pockets of one or two cells are rasterization artifacts in the acute
    sectors of shallow crossings and are ignored; real faces stay well
    above the cutoff at the supported skeleton sizes and rasters.
    """
    blocked = np.zeros((raster, raster), dtype=bool)
    for (a, b) in segments:
        dx, dy = b[0] - a[0], b[1] - a[1]
        steps = max(2, int(math.hypot(dx, dy) * raster * 3) + 1)
        ts = np.linspace(0.0, 1.0, steps)
        xs = np.clip(((a[0] + ts * dx) * raster).astype(int), 0, raster - 1)
        ys = np.clip(((a[1] + ts * dy) * raster).astype(int), 0, raster - 1)
        blocked[ys, xs] = True
    # the square boundary is part of every skeleton
    blocked[0, :] = blocked[-1, :] = True
    blocked[:, 0] = blocked[:, -1] = True
    count, labels = label_components(~blocked, connectivity=4)
    if count:
        sizes = np.bincount(labels.ravel())
        count = int(np.count_nonzero(sizes[1:] >= min_area))
    return count


# ---------------------------------------------------------------------------
# Vertex correspondence


@dataclass
class CorrespondenceResult:
    ok: bool
    mapping: dict          # label -> (vertex id in a, vertex id in b)
    problems: list

    def __bool__(self):
        return self.ok


def vertex_correspondence(a: SkeletonComplex, b: SkeletonComplex) -> CorrespondenceResult:
    """Match vertices by combinatorial label and verify along-bone order."""
    if a.n != b.n:
        raise DomainError("skeletons must have the same n")
    problems = []
    try:
        la, lb = a.vertex_by_label(), b.vertex_by_label()
    except InfeasibleError as exc:
        return CorrespondenceResult(False, {}, [str(exc)])
    only_a = sorted(set(la) - set(lb))
    only_b = sorted(set(lb) - set(la))
    for lab in only_a:
        problems.append(f"label {lab} only in {a.family}")
    for lab in only_b:
        problems.append(f"label {lab} only in {b.family}")
    mapping = {lab: (la[lab].id, lb[lab].id) for lab in set(la) & set(lb)}
    if not problems:
        for key in a.bones:
            seq_a = _bone_label_sequence(a, key)
            seq_b = _bone_label_sequence(b, key)
            if seq_a != seq_b:
                problems.append(f"vertex order differs along bone {key}:"
                                f" {seq_a} vs {seq_b}")
        if _boundary_label_sequence(a) != _boundary_label_sequence(b):
            problems.append("boundary vertex order differs")
    return CorrespondenceResult(not problems, mapping, problems)


def _bone_label_sequence(skel: SkeletonComplex, key):
    # edges along one bone were appended in path order
    chain = [e for e in skel.edges if e.carrier == ("bone",) + key]
    if not chain:
        return []
    labels = {vx.id: vx.label for vx in skel.vertices}
    return [labels[chain[0].v_from]] + [labels[e.v_to] for e in chain]


def _boundary_label_sequence(skel: SkeletonComplex):
    verts = []
    for vx in skel.vertices:
        v, w = vx.param
        if min(v, w) < 1e-9 or max(v, w) > 1 - 1e-9:
            verts.append((_perimeter_position(v, w), vx.label))
    return [lab for _, lab in sorted(verts, key=lambda t: t[0])]


# ---------------------------------------------------------------------------
# Isentropes


# corner bits: 0 bottom-left, 1 bottom-right, 2 top-right, 3 top-left
# cell edges:  0 bottom, 1 right, 2 top, 3 left
_MS_EDGES = {
    1: [(0, 3)], 2: [(0, 1)], 3: [(1, 3)], 4: [(1, 2)],
    5: [(0, 3), (1, 2)], 6: [(0, 2)], 7: [(2, 3)], 8: [(2, 3)],
    9: [(0, 2)], 10: [(0, 1), (2, 3)], 11: [(1, 2)], 12: [(1, 3)],
    13: [(0, 1)], 14: [(0, 3)],
}


@dataclass
class Isentrope:
    h0: float
    cells: np.ndarray        # bool (R-1, R-1) bracketing mask
    components: int
    polylines: list          # chained contour points in parameter coords

    def to_json(self):
        return {
            "h0": format(self.h0, ".17g"),
            "bracketing_cells": int(self.cells.sum()),
            "components": self.components,
            "polylines": [[[format(x, ".17g"), format(y, ".17g")]
                           for x, y in line] for line in self.polylines],
        }


def isentrope_extract(grid: EntropyGrid, h0: float) -> Isentrope:
    """Bracketing cells with error padding, contours, and component count.

    A cell qualifies when [min corner - err, max corner + err] contains h0,
    so the true level set is never excluded; components use 8-adjacency to
    keep thin diagonal level sets connected.
    """
    if not 0 <= h0 <= LOG4 + 1e-12:
        raise DomainError("h0 must lie in [0, log 4]")
    V = grid.values
    E = grid.errors
    c00, c10 = V[:-1, :-1], V[:-1, 1:]
    c01, c11 = V[1:, :-1], V[1:, 1:]
    cmin = np.minimum(np.minimum(c00, c10), np.minimum(c01, c11))
    cmax = np.maximum(np.maximum(c00, c10), np.maximum(c01, c11))
    epad = np.maximum(np.maximum(E[:-1, :-1], E[:-1, 1:]),
                      np.maximum(E[1:, :-1], E[1:, 1:]))
    mask = (cmin - epad <= h0) & (h0 <= cmax + epad)
    count, _ = label_components(mask, connectivity=8)
    polylines = _marching_squares(grid, h0)
    return Isentrope(h0, mask, count, polylines)


def _marching_squares(grid: EntropyGrid, h0: float):
    V = grid.values
    R = grid.resolution
    coord = lambda i: (i + 0.5) / R
    segments = []
    for j in range(R - 1):
        for i in range(R - 1):
            corners = [V[j, i], V[j, i + 1], V[j + 1, i + 1], V[j + 1, i]]
            case = 0
            for bit, val in enumerate(corners):
                if val > h0:
                    case |= 1 << bit
            if case in (0, 15):
                continue
            # edge order: 0 bottom, 1 right, 2 top, 3 left
            pts = {}
            edge_nodes = {0: (0, 1), 1: (1, 2), 2: (3, 2), 3: (0, 3)}
            node_xy = {0: (coord(i), coord(j)), 1: (coord(i + 1), coord(j)),
                       2: (coord(i + 1), coord(j + 1)), 3: (coord(i), coord(j + 1))}
            node_val = {0: corners[0], 1: corners[1], 2: corners[2], 3: corners[3]}
            for e, (na, nb) in edge_nodes.items():
                va, vb = node_val[na], node_val[nb]
                if (va > h0) != (vb > h0):
                    t = 0.5 if va == vb else (h0 - va) / (vb - va)
                    xa, ya = node_xy[na]
                    xb, yb = node_xy[nb]
                    pts[e] = (xa + t * (xb - xa), ya + t * (yb - ya))
            for ea, eb in _MS_EDGES.get(case, []):
                if ea in pts and eb in pts:
                    segments.append((pts[ea], pts[eb]))
    return _chain_segments(segments)


def _chain_segments(segments, quantum=1e-12):
    key = lambda p: (round(p[0] / quantum), round(p[1] / quantum))
    links = {}
    for idx, (a, b) in enumerate(segments):
        links.setdefault(key(a), []).append((idx, b))
        links.setdefault(key(b), []).append((idx, a))
    used = set()
    chains = []

    def extend(chain):
        while True:
            nxt = next(((i, q) for i, q in links.get(key(chain[-1]), ())
                        if i not in used), None)
            if nxt is None:
                return
            used.add(nxt[0])
            chain.append(nxt[1])

    for idx, (a, b) in enumerate(segments):
        if idx in used:
            continue
        used.add(idx)
        chain = [a, b]
        extend(chain)
        chain.reverse()
        extend(chain)
        chains.append(chain)
    return chains


# ---------------------------------------------------------------------------
# Refinement audit


@dataclass
class RefinementReport:
    resolutions: list
    max_variation: list
    nested: list           # booleans per consecutive pair
    bracket_counts: list

    @property
    def passed(self) -> bool:
        decreasing = all(b < a for a, b in zip(self.max_variation,
                                               self.max_variation[1:]))
        return decreasing and all(self.nested)


def refinement_audit(family: str, h0: float, resolutions,
                     kmax: int = 12, lap_budget: int = 200_000,
                     workers: int = 1) -> RefinementReport:
    """Check cell-level entropy variation shrinks and bracketing sets nest."""
    if list(resolutions) != sorted(resolutions):
        raise DomainError("resolutions must increase")
    grids = [entropy_grid(family, R, kmax, lap_budget, workers)
             for R in resolutions]
    variations = []
    masks = []
    for g in grids:
        V = g.values
        cmin = np.minimum(np.minimum(V[:-1, :-1], V[:-1, 1:]),
                          np.minimum(V[1:, :-1], V[1:, 1:]))
        cmax = np.maximum(np.maximum(V[:-1, :-1], V[:-1, 1:]),
                          np.maximum(V[1:, :-1], V[1:, 1:]))
        variations.append(float((cmax - cmin).max()))
        masks.append(isentrope_extract(g, h0).cells)
    nested = []
    for (Rc, mc), (Rf, mf) in zip(zip(resolutions, masks),
                                  list(zip(resolutions, masks))[1:]):
        grown = mc.copy()
        grown[1:, :] |= mc[:-1, :]
        grown[:-1, :] |= mc[1:, :]
        grown[:, 1:] |= grown[:, :-1].copy()
        grown[:, :-1] |= grown[:, 1:].copy()
        ok = True
        for j, i in zip(*np.nonzero(mf)):
            px, py = (i + 1.0) / Rf, (j + 1.0) / Rf
            ic = min(max(int(px * Rc - 0.5), 0), Rc - 2)
            jc = min(max(int(py * Rc - 0.5), 0), Rc - 2)
            if not grown[jc, ic]:
                ok = False
                break
        nested.append(ok)
    return RefinementReport(list(resolutions), variations, nested,
                            [int(m.sum()) for m in masks])


def render_overlay(grid: EntropyGrid, skeleton: Optional[SkeletonComplex] = None,
                   isentrope: Optional[Isentrope] = None) -> bytes:
    """PGM heatmap with bones burned to white and contours to black."""
    R = grid.resolution
    img = np.clip(np.rint(grid.values / LOG4 * 235.0), 0, 235).astype(np.uint8)

    def burn(p, value):
        x = min(int(p[0] * R), R - 1)
        y = min(int(p[1] * R), R - 1)
        img[y, x] = value

    if skeleton is not None:
        for bone in skeleton.bones.values():
            if isinstance(bone, StBone):
                segs = _st_segments_float(bone)
                pts = [q for seg in segs
                       for q in np.linspace(seg[0], seg[1], 4 * R).tolist()]
            else:
                pts = bone.polyline.tolist()
            for p in pts:
                burn(p, 255)
    if isentrope is not None:
        for line in isentrope.polylines:
            for p in line:
                burn(p, 0)
    header = f"P5\n{R} {R}\n255\n".encode()
    return header + img[::-1].tobytes()
