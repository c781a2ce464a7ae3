"""Topological entropy estimation via lap growth and negative-type fixed
point counting, plus parameter-grid sweeps and monotonicity audits.

Lap structure of the k-th composition iterate is grown by pulling back
turning points one level at a time: closed-form quadratic preimages for the
logistic family, exact integer linear solves for the stunted family (tent
slopes are +-2, so composition laps have slope +-4 and preimage numerators
need no division at all).
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from fractions import Fraction
import numpy as np

from .errors import BudgetError, DomainError
from .families import (
    Dyadic, ParamPoint, critical_points_q_composition, eval_stunted,
    q_param, st_param,
)

LOG4 = math.log(4.0)
DEDUP_TOL = 1e-13
DEFAULT_BUDGET = 10 ** 7


# ---------------------------------------------------------------------------
# Logistic family: floating-point pullback


def _q_preimages(targets, src, p):
    """Preimages of target values under one logistic factor, with provenance."""
    t = np.asarray(targets)
    if p <= 0.0 or len(t) == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    disc = 1.0 - t / p
    ok = disc >= 0.0
    root = np.sqrt(np.clip(disc[ok], 0.0, None))
    vals = np.concatenate([0.5 * (1.0 - root), 0.5 * (1.0 + root)])
    idx = np.concatenate([src[ok], src[ok]])
    return vals, idx


def _q_compose(v, w, x):
    y = 4.0 * v * x * (1.0 - x)
    return 4.0 * w * y * (1.0 - y)


class _QLapState:
    """Turning points and iterate values for the logistic composition."""

    def __init__(self, v, w):
        self.v, self.w = float(v), float(w)
        cp = critical_points_q_composition(self.v)
        pts = sorted(set(cp.points)) if cp.points else [0.5]
        self.crit = np.array(pts)
        self.cval = _q_compose(self.v, self.w, self.crit)
        self.X = self.crit.copy()
        self.V = self.cval.copy()
        self.k = 1

    def level_up(self, budget):
        ys, idx = _q_preimages(self.X, np.arange(len(self.X), dtype=np.int64),
                               self.w)
        xs, idx = _q_preimages(ys, idx, self.v)
        self.cval = _q_compose(self.v, self.w, self.cval)
        X = np.concatenate([self.crit, xs])
        V = np.concatenate([self.cval, self.V[idx]])
        order = np.argsort(X, kind="stable")
        X, V = X[order], V[order]
        if len(X):
            keep = np.empty(len(X), dtype=bool)
            keep[0] = True
            keep[1:] = np.diff(X) > DEDUP_TOL
            X, V = X[keep], V[keep]
        inside = (X > 0.0) & (X < 1.0)
        self.X, self.V = X[inside], V[inside]
        self.k += 1
        if self.lap_count() > budget:
            raise BudgetError(f"lap budget exceeded at level {self.k}")

    def lap_count(self):
        return len(self.X) + 1

    def neg_count(self):
        Xf = np.concatenate([[0.0], self.X, [1.0]])
        Vf = np.concatenate([[0.0], self.V, [0.0]])
        dec = Vf[:-1] > Vf[1:]
        crossing = (Vf[:-1] > Xf[:-1]) & (Vf[1:] <= Xf[1:])
        return int(np.count_nonzero(dec & crossing))


# ---------------------------------------------------------------------------
# Stunted family: exact integer pullback at a common dyadic exponent


def _st_pieces(v: Dyadic, w: Dyadic):
    """Exact lap decomposition of the composition: (lo, hi, slope, offset).

    Fractions throughout; slopes are 0 or +-4 and adjacent pieces with the
    same affine data merge, so plateau-onto-plateau stretches form one lap.
    """
    vf, wf = v.as_fraction(), w.as_fraction()

    def st(h, x):
        if x < h / 2:
            return 2 * x
        if x > 1 - h / 2:
            return 2 - 2 * x
        return h

    cand = {Fraction(0), Fraction(1), vf / 2, 1 - vf / 2}
    for t in (wf / 2, 1 - wf / 2):
        if t <= vf:
            cand |= {t / 2, 1 - t / 2}
    cuts = sorted(c for c in cand if 0 <= c <= 1)
    pieces = []
    for a, b in zip(cuts, cuts[1:]):
        if a == b:
            continue
        mid = (a + b) / 2
        val = st(wf, st(vf, mid))
        eps = (b - a) / 4
        slope = (st(wf, st(vf, mid + eps)) - val) / eps
        offset = val - slope * mid
        if slope not in (-4, 0, 4):
            raise AssertionError(f"unexpected composition slope {slope}")
        if pieces and pieces[-1][2] == slope and pieces[-1][3] == offset:
            pieces[-1] = (pieces[-1][0], b, slope, offset)
        else:
            pieces.append((a, b, slope, offset))
    return pieces


class _StLapState:
    """Exact turning points (int64 numerators) for the stunted composition."""

    def __init__(self, v: Dyadic, w: Dyadic):
        self.v, self.w = v, w
        fracs = _st_pieces(v, w)
        exp0 = 2
        for lo, hi, a, b in fracs:
            for q in (lo, hi, b):
                exp0 = max(exp0, q.denominator.bit_length() - 1)
        scale = 1 << exp0
        self.exp0 = exp0
        self.pieces = [(int(lo * scale), int(hi * scale), int(a), int(b * scale))
                       for lo, hi, a, b in fracs]
        base = [Dyadic(hi, exp0) for (_, hi, _, _) in self.pieces[:-1]]
        self.base = base
        self.cd = [self._compose(x) for x in base]
        self.exp = exp0
        self.k = 1
        self.X = np.array([x.num << (exp0 - x.exp) for x in base], dtype=np.int64)
        self.V = np.array([c.num << (exp0 - c.exp) for c in self.cd], dtype=np.int64)

    def _compose(self, x: Dyadic) -> Dyadic:
        return eval_stunted(self.w, eval_stunted(self.v, x))

    def level_up(self, budget):
        new_exp = self.exp + 2
        if new_exp > 58:
            raise BudgetError("dyadic exponent budget exceeded")
        self.cd = [self._compose(c) for c in self.cd]
        xs_parts = [np.array([x.num << (new_exp - x.exp) for x in self.base],
                             dtype=np.int64)]
        vs_parts = [np.array([c.num << (new_exp - c.exp) for c in self.cd],
                             dtype=np.int64)]
        shift = new_exp - self.exp0
        for lo, hi, a, b in self.pieces:
            if a == 0:
                continue
            # x = (t - b)/a: with |a| = 4 the numerator of x at exponent
            # exp+2 is exactly the numerator of t - b at exponent exp
            diff = self.X - (np.int64(b) << (self.exp - self.exp0))
            x = diff if a > 0 else -diff
            keep = (x >= (np.int64(lo) << shift)) & (x <= (np.int64(hi) << shift))
            xs_parts.append(x[keep])
            vs_parts.append(self.V[keep] << 2)
        X = np.concatenate(xs_parts)
        V = np.concatenate(vs_parts)
        order = np.argsort(X, kind="stable")
        X, V = X[order], V[order]
        if len(X):
            keep = np.empty(len(X), dtype=bool)
            keep[0] = True
            keep[1:] = np.diff(X) > 0
            X, V = X[keep], V[keep]
        inside = (X > 0) & (X < (1 << new_exp))
        X, V = X[inside], V[inside]
        # points whose whole neighbourhood sits in a flat stretch do not end
        # a lap (the monotonicity type is unchanged across them), and their
        # preimages would not either: prune by exact lap directions
        if len(X):
            Vf = np.concatenate([[np.int64(0)], V, [np.int64(0)]])
            d = np.sign(np.diff(Vf))
            genuine = d[:-1] != d[1:]
            X, V = X[genuine], V[genuine]
        self.X, self.V = X, V
        self.exp = new_exp
        self.k += 1
        if self.lap_count() > budget:
            raise BudgetError(f"lap budget exceeded at level {self.k}")

    def lap_count(self):
        return len(self.X) + 1

    def neg_count(self):
        one = np.int64(1) << self.exp
        Xf = np.concatenate([[np.int64(0)], self.X, [one]])
        Vf = np.concatenate([[np.int64(0)], self.V, [np.int64(0)]])
        dec = Vf[:-1] > Vf[1:]
        crossing = (Vf[:-1] > Xf[:-1]) & (Vf[1:] <= Xf[1:])
        return int(np.count_nonzero(dec & crossing))


def _lap_state(p: ParamPoint):
    if p.family == "st":
        return _StLapState(Dyadic.from_value(p.v), Dyadic.from_value(p.w))
    return _QLapState(*p.floats())


def lap_profile(p: ParamPoint, kmax: int, lap_budget: int = DEFAULT_BUDGET):
    """Lap and negative-fixed-point counts for k = 1..k_reached <= kmax."""
    if kmax < 1:
        raise DomainError("kmax must be >= 1")
    state = _lap_state(p)
    laps = [state.lap_count()]
    negs = [state.neg_count()]
    for _ in range(kmax - 1):
        try:
            state.level_up(lap_budget)
        except BudgetError:
            break
        laps.append(state.lap_count())
        negs.append(state.neg_count())
    return laps, negs


def lap_count(p: ParamPoint, k: int, lap_budget: int = DEFAULT_BUDGET) -> int:
    laps, _ = lap_profile(p, k, lap_budget)
    if len(laps) < k:
        raise BudgetError(f"lap budget hit at level {len(laps)} < {k}")
    return laps[k - 1]


def neg_count(p: ParamPoint, k: int, lap_budget: int = DEFAULT_BUDGET) -> int:
    _, negs = lap_profile(p, k, lap_budget)
    if len(negs) < k:
        raise BudgetError(f"lap budget hit at level {len(negs)} < {k}")
    return negs[k - 1]


@dataclass(frozen=True)
class EntropyEstimate:
    h: float
    err: float
    h_lap: float
    h_neg: float
    k_reached: int
    laps: tuple
    negs: tuple


def _tail_ratio_mean(seq, count=3):
    ratios = [math.log(b / a) for a, b in zip(seq, seq[1:]) if a > 0 and b > 0]
    if not ratios:
        return 0.0, 0.0
    tail = ratios[-count:]
    mean = sum(tail) / len(tail)
    spread = (max(tail) - min(tail)) / 2
    return mean, spread


def _window_slope(seq, window=5):
    """Secant slope of log(seq) over trailing same-parity positive samples.

    Counts of negative-type fixed points oscillate strongly with the parity
    of the iterate (odd iterates can floor at a single point), so the secant
    is taken along the parity class of the recent maximum, across several
    levels to average the jitter out.
    """
    if not any(x > 0 for x in seq):
        return 0.0
    last = len(seq) - 1
    if last >= 1 and seq[last - 1] > seq[last]:
        last -= 1
    pos = [(i, x) for i, x in enumerate(seq)
           if x > 0 and (i - last) % 2 == 0][-window:]
    if len(pos) < 2:
        pos = [(i, x) for i, x in enumerate(seq) if x > 0][-window:]
    if len(pos) < 2 or pos[-1][0] == pos[0][0]:
        return 0.0
    (i0, x0), (i1, x1) = pos[0], pos[-1]
    return math.log(x1 / x0) / (i1 - i0)


def entropy_estimate(p: ParamPoint, kmax: int = 12,
                     lap_budget: int = DEFAULT_BUDGET) -> EntropyEstimate:
    """Entropy with an error bar from two growth estimators.

    The primary estimate averages the last lap-count log-ratios; the
    cross-check is the growth rate of negative-fixed-point counts (their
    limit is the entropy as well, and growth rates converge geometrically
    where a direct (1/k) log form carries an O(1/k) bias).  The bar is the
    estimator disagreement plus the lap-ratio spread; budget pressure
    shortens k and widens the bar.
    """
    if kmax < 4:
        raise DomainError("kmax must be >= 4")
    laps, negs = lap_profile(p, kmax, lap_budget)
    h_lap, spread_l = _tail_ratio_mean(laps)
    h_neg = max(_window_slope(negs), 0.0)
    h = min(max(h_lap, 0.0), LOG4)
    err = max(abs(h_lap - h_neg), spread_l)
    return EntropyEstimate(h, err, h_lap, h_neg, len(laps),
                           tuple(laps), tuple(negs))


# ---------------------------------------------------------------------------
# Grids


@dataclass
class EntropyGrid:
    family: str
    resolution: int
    kmax: int
    values: np.ndarray      # [iw, iv], cell centers (i + 1/2)/R
    errors: np.ndarray
    estimator: str = "lap_growth"
    lap_budget: int = DEFAULT_BUDGET

    def center(self, iv: int, iw: int):
        r = self.resolution
        return ((iv + 0.5) / r, (iw + 0.5) / r)


def _grid_row(args):
    family, R, kmax, lap_budget, iw = args
    w = (iw + 0.5) / R
    hs = np.empty(R)
    errs = np.empty(R)
    for iv in range(R):
        v = (iv + 0.5) / R
        p = st_param(Dyadic.from_value(Fraction(2 * iv + 1, 2 * R)),
                     Dyadic.from_value(Fraction(2 * iw + 1, 2 * R))) \
            if family == "st" else q_param(v, w)
        est = entropy_estimate(p, kmax, lap_budget)
        hs[iv] = est.h
        errs[iv] = est.err
    return iw, hs, errs


def entropy_grid(family: str, R: int, kmax: int = 12,
                 lap_budget: int = DEFAULT_BUDGET, workers: int = 1) -> EntropyGrid:
    """Entropy over the R x R cell-center lattice; deterministic for any
    worker count (cells are independent and assembled by index)."""
    if R < 2:
        raise DomainError("resolution must be >= 2")
    if family not in ("st", "q"):
        raise DomainError(f"unknown family {family!r}")
    if family == "st" and R & (R - 1):
        raise DomainError("stunted grids need a power-of-two resolution")
    values = np.empty((R, R))
    errors = np.empty((R, R))
    jobs = [(family, R, kmax, lap_budget, iw) for iw in range(R)]
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            for iw, hs, errs in pool.imap_unordered(_grid_row, jobs, chunksize=4):
                values[iw], errors[iw] = hs, errs
    else:
        for job in jobs:
            iw, hs, errs = _grid_row(job)
            values[iw], errors[iw] = hs, errs
    return EntropyGrid(family, R, kmax, values, errors, lap_budget=lap_budget)


def grid_to_csv(grid: EntropyGrid) -> str:
    lines = ["v,w,h,err,estimator"]
    R = grid.resolution
    for iw in range(R):
        for iv in range(R):
            v, w = grid.center(iv, iw)
            lines.append(f"{format(v, '.17g')},{format(w, '.17g')},"
                         f"{format(grid.values[iw, iv], '.17g')},"
                         f"{format(grid.errors[iw, iv], '.17g')},{grid.estimator}")
    return "\n".join(lines) + "\n"


def grid_to_pgm(grid: EntropyGrid) -> bytes:
    """Binary PGM, rows from w = 1 down to 0, entropy scaled to 0..255."""
    R = grid.resolution
    scaled = np.clip(np.rint(grid.values / LOG4 * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{R} {R}\n255\n".encode()
    return header + scaled[::-1].tobytes()


# ---------------------------------------------------------------------------
# Monotonicity audits


@dataclass
class MonotonicityReport:
    points: list
    values: list
    errors: list
    violations: list      # (index, deficit)

    @property
    def passed(self) -> bool:
        return not self.violations


def entropy_monotonicity_audit(path, kmax: int = 12,
                               lap_budget: int = DEFAULT_BUDGET) -> MonotonicityReport:
    """Check entropy is non-decreasing along a path within error bars."""
    ests = [entropy_estimate(p, kmax, lap_budget) for p in path]
    hs = [e.h for e in ests]
    errs = [e.err for e in ests]
    violations = []
    for i in range(len(hs) - 1):
        deficit = hs[i] - hs[i + 1] - (errs[i] + errs[i + 1])
        if deficit > 0:
            violations.append((i, deficit))
    return MonotonicityReport(list(path), hs, errs, violations)
