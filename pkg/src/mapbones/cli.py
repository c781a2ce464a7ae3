"""Command-line front end: every pipeline stage behind one subcommand, with
reproducible file-based outputs and a manifest per run."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .entropy import (
    entropy_grid, entropy_monotonicity_audit, grid_to_csv, grid_to_pgm,
)
from .errors import BudgetError, DomainError, InfeasibleError, TraceError
from .families import classify_hyperbolic, q_param
from .q_bones import (
    q_secondary_intersections, traced_bone, transversality_check,
)
from .skeleton import build_skeleton, isentrope_extract, render_overlay
from .st_bones import st_bone, st_crossings, st_distinguished_points
from .symbolic import admissible_order_data


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


class _Run:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts = []

    def emit(self, name: str, data) -> None:
        path = self.out / name
        if isinstance(data, bytes):
            path.write_bytes(data)
        elif isinstance(data, str):
            path.write_text(data)
        else:
            _write_json(path, data)
        self.artifacts.append(name)

    def finish(self) -> None:
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        _write_json(self.out / "manifest.json", {
            "version": __version__,
            "command": self.args.command,
            "config": config,
            "artifacts": sorted(self.artifacts),
        })


def _ods_for_period(period: int):
    if period % 2 or period < 2:
        raise DomainError("period must be a positive even number")
    return admissible_order_data(period // 2)


def cmd_orderdata(run: _Run) -> None:
    ods = admissible_order_data(run.args.n)
    run.emit("orderdata.json", {
        "n": run.args.n,
        "count": len(ods),
        "order_data": [od.serialize() for od in ods],
    })


def cmd_bones(run: _Run) -> None:
    import dataclasses

    a = run.args
    ods = _ods_for_period(a.period)
    for i, od in enumerate(ods):
        for side in ("left", "right"):
            if a.family == "st":
                bone = st_bone(od, side)
                if a.m:
                    bone = dataclasses.replace(
                        bone,
                        distinguished=tuple(st_distinguished_points(bone, a.m)))
                run.emit(f"bone_{side}_{a.period}_{i}.bone.json", bone.to_json())
            else:
                bone = traced_bone(od, side, a.step_init)
                run.emit(f"bone_{side}_{a.period}_{i}.bone.json", bone.to_json())


def cmd_trace(run: _Run) -> None:
    a = run.args
    if a.family != "q":
        raise DomainError("trace applies to the logistic family")
    ods = _ods_for_period(a.period)
    sides = (a.side,) if a.side else ("left", "right")
    for i, od in enumerate(ods):
        for side in sides:
            bone = traced_bone(od, side, a.step_init)
            run.emit(f"bone_{side}_{a.period}_{i}.bone.json", bone.to_json())
            run.emit(f"bone_{side}_{a.period}_{i}.csv", bone.polyline_csv())


def cmd_intersections(run: _Run) -> None:
    a = run.args
    ods = []
    for period in range(2, a.period + 1, 2):
        ods.extend(_ods_for_period(period))
    records = []
    if a.family == "st":
        lefts = {od: st_bone(od, "left") for od in ods}
        rights = {od: st_bone(od, "right") for od in ods}
        for odl, left in lefts.items():
            for odr, right in rights.items():
                for p, kind, data in st_crossings(left, right):
                    records.append({
                        "v": _fmt(p.v), "w": _fmt(p.w), "kind": kind,
                        "left": odl.serialize(), "right": odr.serialize(),
                        "data": data.serialize() if hasattr(data, "serialize")
                                else str(data),
                    })
    else:
        lefts = {od: traced_bone(od, "left", a.step_init) for od in ods}
        rights = {od: traced_bone(od, "right", a.step_init) for od in ods}
        for odl, left in lefts.items():
            for odr, right in rights.items():
                for rec in q_secondary_intersections(left, right):
                    angle = transversality_check(left, right, rec.param)
                    records.append({
                        "v": _fmt(rec.param.v), "w": _fmt(rec.param.w),
                        "kind": rec.kind, "left": odl.serialize(),
                        "right": odr.serialize(),
                        "data": rec.data.serialize(),
                        "angle": _fmt(angle),
                    })
    records.sort(key=lambda r: (r["v"], r["w"], r["left"], r["right"]))
    run.emit("intersections.json", {"period": a.period, "family": a.family,
                                    "count": len(records),
                                    "intersections": records})


def cmd_entropy_grid(run: _Run) -> None:
    a = run.args
    grid = entropy_grid(a.family, a.res, a.kmax, a.lap_budget, a.workers)
    run.emit("grid.csv", grid_to_csv(grid))
    run.emit("grid.pgm", grid_to_pgm(grid))


def cmd_isentrope(run: _Run) -> None:
    a = run.args
    grid = entropy_grid(a.family, a.res, a.kmax, a.lap_budget, a.workers)
    iso = isentrope_extract(grid, a.h0)
    run.emit("isentrope.json", iso.to_json())
    lines = ["contour,v,w"]
    for ci, line in enumerate(iso.polylines):
        for x, y in line:
            lines.append(f"{ci},{_fmt(x)},{_fmt(y)}")
    run.emit("contours.csv", "\n".join(lines) + "\n")
    run.emit("grid.csv", grid_to_csv(grid))
    run.emit("overlay.pgm", render_overlay(grid, None, iso))


def cmd_skeleton(run: _Run) -> None:
    a = run.args
    skel = build_skeleton(a.family, a.n, step_init=a.step_init)
    run.emit("skeleton.json", skel.to_json())


def cmd_audit_monotonicity(run: _Run) -> None:
    a = run.args
    if a.family != "q":
        raise DomainError("the bone-arc audit applies to the logistic family")
    report = {"paths": []}
    for od in _ods_for_period(a.period):
        bone = traced_bone(od, "left", a.step_init)
        pv = bone.primary_vertex()
        idx = int(pv.index)
        for name, half in (("to_first_endpoint", bone.polyline[idx::-1]),
                           ("to_second_endpoint", bone.polyline[idx:])):
            sel = np.linspace(0, len(half) - 1, a.samples).astype(int)
            pts = [q_param(*half[i]) for i in sel]
            rep = entropy_monotonicity_audit(pts, a.kmax, a.lap_budget)
            report["paths"].append({
                "order_data": od.serialize(), "arm": name,
                "passed": rep.passed,
                "h": [_fmt(h) for h in rep.values],
                "violations": len(rep.violations),
            })
    for name, pts in (
            ("top_boundary", [q_param(v, 1.0)
                              for v in np.linspace(0.02, 0.98, a.samples)]),
            ("right_boundary", [q_param(1.0, w)
                                for w in np.linspace(0.02, 0.98, a.samples)])):
        rep = entropy_monotonicity_audit(pts, a.kmax, a.lap_budget)
        report["paths"].append({"path": name, "passed": rep.passed,
                                "h": [_fmt(h) for h in rep.values],
                                "violations": len(rep.violations)})
    report["passed"] = all(p["passed"] for p in report["paths"])
    run.emit("audit.json", report)


def cmd_classify(run: _Run) -> None:
    a = run.args
    res = classify_hyperbolic(q_param(a.v, a.w), max_iter=a.max_iter)
    out = {
        "v": _fmt(a.v), "w": _fmt(a.w), "kind": res.kind,
        "degenerate": res.degenerate,
        "multiplier1": None if res.multiplier1 is None else _fmt(res.multiplier1),
        "multiplier2": None if res.multiplier2 is None else _fmt(res.multiplier2),
        "cycle1": None if res.cycle1 is None else
                  [[ln, _fmt(x)] for ln, x in res.cycle1],
        "cycle2": None if res.cycle2 is None else
                  [[ln, _fmt(x)] for ln, x in res.cycle2],
    }
    run.emit("classification.json", out)
    print(json.dumps(out, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mapbones",
        description="Bones, entropy surfaces and isentropes for alternating "
                    "compositions of unimodal interval maps.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **flags):
        p = sub.add_parser(name)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        for flag, spec in flags.items():
            p.add_argument(flag, **spec)
        p.set_defaults(func=fn)
        return p

    add("orderdata", cmd_orderdata,
        **{"--n": dict(type=int, required=True)})
    add("bones", cmd_bones,
        **{"--family": dict(choices=["st", "q"], required=True),
           "--period": dict(type=int, required=True),
           "--m": dict(type=int, default=0,
                       help="also compute distinguished points to depth 2m (st)"),
           "--step-init": dict(type=float, default=1e-3, dest="step_init")})
    add("trace", cmd_trace,
        **{"--family": dict(choices=["st", "q"], default="q"),
           "--period": dict(type=int, required=True),
           "--side": dict(choices=["left", "right"], default=None),
           "--step-init": dict(type=float, default=1e-3, dest="step_init")})
    add("intersections", cmd_intersections,
        **{"--family": dict(choices=["st", "q"], required=True),
           "--period": dict(type=int, required=True),
           "--step-init": dict(type=float, default=1e-3, dest="step_init")})
    add("entropy-grid", cmd_entropy_grid,
        **{"--family": dict(choices=["st", "q"], required=True),
           "--res": dict(type=int, required=True),
           "--kmax": dict(type=int, default=12),
           "--lap-budget": dict(type=int, default=10 ** 7, dest="lap_budget"),
           "--workers": dict(type=int, default=1)})
    add("isentrope", cmd_isentrope,
        **{"--family": dict(choices=["st", "q"], default="q"),
           "--res": dict(type=int, required=True),
           "--kmax": dict(type=int, default=12),
           "--h0": dict(type=float, required=True),
           "--lap-budget": dict(type=int, default=10 ** 7, dest="lap_budget"),
           "--workers": dict(type=int, default=1)})
    add("skeleton", cmd_skeleton,
        **{"--family": dict(choices=["st", "q"], required=True),
           "--n": dict(type=int, required=True),
           "--step-init": dict(type=float, default=1e-3, dest="step_init")})
    add("audit-monotonicity", cmd_audit_monotonicity,
        **{"--family": dict(choices=["st", "q"], default="q"),
           "--period": dict(type=int, default=2),
           "--kmax": dict(type=int, default=12),
           "--samples": dict(type=int, default=25),
           "--lap-budget": dict(type=int, default=200_000, dest="lap_budget"),
           "--step-init": dict(type=float, default=1e-3, dest="step_init")})
    add("classify", cmd_classify,
        **{"--v": dict(type=float, required=True),
           "--w": dict(type=float, required=True),
           "--max-iter": dict(type=int, default=10 ** 6, dest="max_iter")})
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    run = _Run(args)
    try:
        args.func(run)
        run.finish()
    except (DomainError, InfeasibleError, TraceError, BudgetError) as exc:
        _write_json(run.out / "errors.json",
                    {"error": type(exc).__name__, "message": str(exc)})
        run.finish()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
