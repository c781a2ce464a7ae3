"""The two map families: logistic compositions (floats) and stunted tent
compositions (exact dyadic arithmetic), with orbit machinery, critical-point
analysis and a numeric hyperbolic-type classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DomainError
from .symbolic import Itinerary, OrderData, Symbol, check_admissible

TOL_SYM = 1e-12      # iterate this close to the fold is classified critical
TOL_ORBIT = 1e-10    # float periodicity detection


class Dyadic:
    """Exact dyadic rational num / 2**exp with minimal non-negative exponent."""

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if exp < 0:
            num <<= -exp
            exp = 0
        while num and num % 2 == 0 and exp > 0:
            num //= 2
            exp -= 1
        if num == 0:
            exp = 0
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, *args):
        raise AttributeError("Dyadic is immutable")

    @staticmethod
    def from_value(x) -> "Dyadic":
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, int):
            return Dyadic(x, 0)
        if isinstance(x, Fraction):
            den = x.denominator
            exp = den.bit_length() - 1
            if den != 1 << exp:
                raise DomainError(f"{x} is not dyadic")
            return Dyadic(x.numerator, exp)
        if isinstance(x, float):
            num, den = x.as_integer_ratio()
            return Dyadic(num, den.bit_length() - 1)
        raise DomainError(f"cannot coerce {x!r} to Dyadic")

    @staticmethod
    def parse(text: str) -> "Dyadic":
        num, power = text.split("/")
        base, exp = power.split("^")
        if base.strip() != "2":
            raise DomainError(f"bad dyadic literal {text!r}")
        return Dyadic(int(num), int(exp))

    def serialize(self) -> str:
        return f"{self.num}/2^{self.exp}"

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def halve(self) -> "Dyadic":
        return Dyadic(self.num, self.exp + 1)

    def double(self) -> "Dyadic":
        return Dyadic(self.num, self.exp - 1) if self.exp else Dyadic(self.num * 2, 0)

    def _pair(self, other):
        other = Dyadic.from_value(other)
        e = max(self.exp, other.exp)
        return (self.num << (e - self.exp), other.num << (e - other.exp), e)

    def __add__(self, other):
        a, b, e = self._pair(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        a, b, e = self._pair(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        a, b, e = self._pair(other)
        return Dyadic(b - a, e)

    def __mul__(self, other):
        other = Dyadic.from_value(other)
        return Dyadic(self.num * other.num, self.exp + other.exp)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.num, self.exp)

    def _cmp(self, other):
        a, b, _ = self._pair(other)
        return (a > b) - (a < b)

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except DomainError:
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash((self.num, self.exp))

    def __float__(self):
        return self.num / (1 << self.exp)

    def __repr__(self):
        return f"Dyadic({self.num}, {self.exp})"

    def __str__(self):
        return self.serialize()


D_ZERO = Dyadic(0)
D_HALF = Dyadic(1, 1)
D_ONE = Dyadic(1)


@dataclass(frozen=True)
class ParamPoint:
    """A point (v, w) of one of the two parameter squares."""

    v: object
    w: object
    family: str  # "st" or "q"

    def __post_init__(self):
        if self.family not in ("st", "q"):
            raise DomainError(f"unknown family {self.family!r}")
        if not (0 <= float(self.v) <= 1 and 0 <= float(self.w) <= 1):
            raise DomainError("parameters must lie in [0,1]^2")

    def floats(self):
        return float(self.v), float(self.w)


def st_param(v, w) -> ParamPoint:
    return ParamPoint(Dyadic.from_value(v), Dyadic.from_value(w), "st")


def q_param(v, w) -> ParamPoint:
    return ParamPoint(float(v), float(w), "q")


def eval_logistic(v: float, x: float) -> float:
    return 4.0 * v * x * (1.0 - x)


def eval_logistic_deriv(v: float, x: float) -> float:
    return 4.0 * v * (1.0 - 2.0 * x)


def eval_stunted(v: Dyadic, x: Dyadic) -> Dyadic:
    """Tent branches of slope +-2 around the plateau at height v (exact)."""
    half_v = v.halve()
    if x < half_v:
        return x.double()
    if x > D_ONE - half_v:
        return (D_ONE - x).double()
    return v


def eval_stunted_float(v: float, x: float) -> float:
    if x < v / 2.0:
        return 2.0 * x
    if x > 1.0 - v / 2.0:
        return 2.0 - 2.0 * x
    return v


def zero_is_repelling(v: float, w: float) -> bool:
    """The origin repels the composition exactly when 16 v w > 1."""
    return 16.0 * float(v) * float(w) > 1.0


@dataclass(frozen=True)
class OrbitStatus:
    kind: str            # "periodic" | "eventually_periodic" | "truncated"
    preperiod: int
    period: int          # pair steps; 0 when truncated


@dataclass(frozen=True)
class OrbitRecord:
    points: tuple
    start_lane: int
    itinerary: Itinerary
    status: OrbitStatus


def _symbol_of(x, lane: int, family: str) -> Symbol:
    if family == "st":
        if x == D_HALF:
            return Symbol(lane, "C")
        return Symbol(lane, "L" if x < D_HALF else "R")
    if abs(x - 0.5) <= TOL_SYM:
        return Symbol(lane, "C")
    return Symbol(lane, "L" if x < 0.5 else "R")


def pair_orbit(p: ParamPoint, x0, max_steps: int = 4096,
               start_lane: int = 1, tol: float = TOL_ORBIT) -> OrbitRecord:
    """Iterate the pair alternately, recording values, symbols and recurrence.

    Periodicity is exact for the stunted family and tolerance-based for the
    logistic one.  The reported period counts pair steps, so it is even.
    """
    exact = p.family == "st"
    if exact:
        x = Dyadic.from_value(x0)
        v, w = p.v, p.w
    else:
        x = float(x0)
        v, w = p.floats()
    if not (0 <= float(x) <= 1):
        raise DomainError("x0 must lie in [0,1]")

    points = [x]
    lane = start_lane
    seen = {}
    if exact:
        seen[(lane, x)] = 0
    lanes_hist = [lane]
    pre = period = None
    for k in range(1, max_steps + 1):
        if exact:
            x = eval_stunted(v if lane == 1 else w, x)
        else:
            x = eval_logistic(v if lane == 1 else w, x)
        lane = 2 if lane == 1 else 1
        points.append(x)
        lanes_hist.append(lane)
        if exact:
            key = (lane, x)
            if key in seen:
                pre, period = seen[key], k - seen[key]
                break
            seen[key] = k
        else:
            for j in range(k % 2, k, 2):
                if lanes_hist[j] == lane and abs(points[j] - x) < tol:
                    pre, period = j, k - j
                    break
            if period is not None:
                break

    symbols = []
    lane = start_lane
    for t, x in enumerate(points):
        symbols.append(_symbol_of(x, lane, p.family))
        lane = 2 if lane == 1 else 1

    if period is None:
        itin = Itinerary(tuple(symbols), ())
        return OrbitRecord(tuple(points), start_lane, itin,
                           OrbitStatus("truncated", len(points) - 1, 0))
    itin = Itinerary(tuple(symbols[:pre]), tuple(symbols[pre:pre + period]))
    kind = "periodic" if pre == 0 else "eventually_periodic"
    return OrbitRecord(tuple(points[:pre + period + 1]), start_lane, itin,
                       OrbitStatus(kind, pre, period))


@dataclass(frozen=True)
class CriticalPoints:
    kind: str       # "real_triple" | "degenerate" | "complex_pair"
    points: Optional[tuple]


def critical_points_q_composition(v: float) -> CriticalPoints:
    """Real critical points of the composed quartic: solutions of q_v(x) = 1/2."""
    v = float(v)
    if not 0 <= v <= 1:
        raise DomainError("v must lie in [0,1]")
    if v < 0.5:
        return CriticalPoints("complex_pair", None)
    if v == 0.5:
        return CriticalPoints("degenerate", (0.5, 0.5, 0.5))
    c1 = 0.5 * (1.0 - math.sqrt(1.0 - 0.5 / v))
    return CriticalPoints("real_triple", (c1, 0.5, 1.0 - c1))


def _orbit_points_from_center(p: ParamPoint, which: int, steps: int):
    """Values along the orbit of the chosen folding point (pair steps)."""
    exact = p.family == "st"
    x = D_HALF if exact else 0.5
    v, w = (p.v, p.w) if exact else p.floats()
    lane = which
    out = [x]
    for _ in range(steps):
        if exact:
            x = eval_stunted(v if lane == 1 else w, x)
        else:
            x = eval_logistic(v if lane == 1 else w, x)
        lane = 2 if lane == 1 else 1
        out.append(x)
    return out


def _order_data_from_orbit(points, start_lane: int) -> OrderData:
    """Rank the lane points of one full period and read off both permutations.

    ``points`` holds one period of 2n values starting at the orbit's base
    point; consecutive values alternate lanes starting at ``start_lane``.
    """
    two_n = len(points)
    n = two_n // 2
    lane_of = lambda t: start_lane if t % 2 == 0 else (3 - start_lane)
    idx1 = [t for t in range(two_n) if lane_of(t) == 1]
    idx2 = [t for t in range(two_n) if lane_of(t) == 2]
    rank1 = {t: r + 1 for r, t in enumerate(sorted(idx1, key=lambda t: points[t]))}
    rank2 = {t: r + 1 for r, t in enumerate(sorted(idx2, key=lambda t: points[t]))}
    sigma, tau = [0] * n, [0] * n
    for t in idx1:
        sigma[rank1[t] - 1] = rank2[(t + 1) % two_n]
    for t in idx2:
        tau[rank2[t] - 1] = rank1[(t + 1) % two_n]
    return OrderData(tuple(sigma), tuple(tau))


def detect_periodic_critical(p: ParamPoint, which: int = 1,
                             max_period: int = 64, tol: float = TOL_ORBIT):
    """Exact period and order data of the chosen folding point, if periodic.

    Returns ``(period, OrderData)`` with the period in pair steps, or None.
    Divisor periods are rejected so the reported period is minimal.
    """
    if max_period % 2:
        raise DomainError("max_period must be even")
    exact = p.family == "st"
    pts = _orbit_points_from_center(p, which, max_period)
    center = D_HALF if exact else 0.5

    def returns(step):
        if exact:
            return pts[step] == center
        return abs(pts[step] - 0.5) < tol

    for n in range(1, max_period // 2 + 1):
        if not returns(2 * n):
            continue
        # iteration order already guarantees minimality; for floats also
        # reject when a proper divisor shows a loose near-return
        if not exact and any(
                n % d == 0 and abs(pts[2 * d] - 0.5) < 10 * tol for d in range(1, n)):
            continue
        period_pts = pts[:2 * n]
        if not exact:
            for lane_vals in (sorted(float(x) for x in period_pts[0::2]),
                              sorted(float(x) for x in period_pts[1::2])):
                if any(b - a < 2 * tol for a, b in zip(lane_vals, lane_vals[1:])):
                    return None  # ranking would be unreliable
        od = _order_data_from_orbit(period_pts, which)
        if not check_admissible(od):
            return None
        return 2 * n, od
    return None


# ---------------------------------------------------------------------------
# Hyperbolic-type classification (logistic family)


@dataclass(frozen=True)
class HyperbolicClassification:
    kind: str                 # bitransitive | capture | disjoint_sinks |
                              # non_hyperbolic_or_undecided
    degenerate: bool
    cycle1: Optional[tuple]   # ((lane, value), ...) attracting cycle of gamma1
    cycle2: Optional[tuple]
    multiplier1: Optional[float]
    multiplier2: Optional[float]


def _find_attracting_cycle(v, w, start_lane, max_iter, tol):
    """Follow one critical orbit; return (cycle, multiplier) or None."""
    x = 0.5
    lane = start_lane
    probe = 256
    steps = 0
    max_cycle = 4096
    while steps < max_iter:
        burst = min(probe, max_iter - steps)
        for _ in range(burst):
            x = eval_logistic(v if lane == 1 else w, x)
            lane = 2 if lane == 1 else 1
        steps += burst
        probe = min(probe * 2, 1 << 20)
        # look for a near-return from the current state
        y, ylane = x, lane
        traj = [(ylane, y)]
        for k in range(1, max_cycle + 1):
            y = eval_logistic(v if ylane == 1 else w, y)
            ylane = 2 if ylane == 1 else 1
            if ylane == lane and abs(y - x) < tol:
                cycle = tuple(traj[:k])
                for d in range(2, k, 2):  # reduce to the minimal period
                    if k % d == 0 and all(
                            abs(cycle[i][1] - cycle[(i + d) % k][1]) < 10 * tol
                            for i in range(k)):
                        cycle = cycle[:d]
                        break
                mult = 1.0
                for ln, val in cycle:
                    mult *= eval_logistic_deriv(v if ln == 1 else w, val)
                if abs(mult) < 1.0 - tol:
                    return cycle, mult
                break
            traj.append((ylane, y))
    return None


def _canonical_cycle(cycle):
    return tuple(sorted((ln, round(val, 7)) for ln, val in cycle))


def _same_cycle(c1, c2, tol=1e-6):
    if len(c1) != len(c2):
        return False
    a = sorted((ln, val) for ln, val in c1)
    b = sorted((ln, val) for ln, val in c2)
    return all(la == lb and abs(xa - xb) < tol for (la, xa), (lb, xb) in zip(a, b))


def _in_immediate_basin(v, w, gamma_lane, cycle, samples=17, steps=2000, tol=1e-6):
    """Phase-locked convergence of the whole segment joining the fold to the
    nearest same-lane cycle point; a repelling point in between breaks it."""
    lane_pts = [val for ln, val in cycle if ln == gamma_lane]
    if not lane_pts:
        return False
    z = min(lane_pts, key=lambda val: abs(val - 0.5))
    if abs(z - 0.5) < tol:
        return True
    xs = [0.5 + (z - 0.5) * i / (samples - 1) for i in range(samples)]
    zs = z
    lane = gamma_lane
    for _ in range(steps):
        param = v if lane == 1 else w
        xs = [eval_logistic(param, x) for x in xs]
        zs = eval_logistic(param, zs)
        lane = 2 if lane == 1 else 1
    return all(abs(x - zs) < tol for x in xs)


def classify_hyperbolic(p: ParamPoint, max_iter: int = 10 ** 6,
                        tol: float = 1e-9) -> HyperbolicClassification:
    """Numeric trichotomy for the logistic pair at ``p``.

    Both critical orbits are followed to attracting cycles; distinct cycles
    mean disjoint sinks, a shared cycle is bitransitive or capture depending
    on which folds sit in the immediate basin.  A shared cycle at the
    boundary fixed point is reported with the degenerate flag.
    """
    if p.family != "q":
        raise DomainError("classification applies to the logistic family")
    v, w = p.floats()
    r1 = _find_attracting_cycle(v, w, 1, max_iter, tol)
    r2 = _find_attracting_cycle(v, w, 2, max_iter, tol)
    if r1 is None or r2 is None:
        return HyperbolicClassification("non_hyperbolic_or_undecided", False,
                                        None if r1 is None else r1[0],
                                        None if r2 is None else r2[0],
                                        None if r1 is None else r1[1],
                                        None if r2 is None else r2[1])
    c1, m1 = r1
    c2, m2 = r2
    if not _same_cycle(c1, c2):
        return HyperbolicClassification("disjoint_sinks", False, c1, c2, m1, m2)
    degenerate = all(abs(val) < 1e-7 for _, val in c1)
    in1 = _in_immediate_basin(v, w, 1, c1)
    in2 = _in_immediate_basin(v, w, 2, c2)
    if in1 and in2:
        return HyperbolicClassification("bitransitive", degenerate, c1, c2, m1, m2)
    if in1 or in2:
        return HyperbolicClassification("capture", degenerate, c1, c2, m1, m2)
    return HyperbolicClassification("non_hyperbolic_or_undecided", degenerate,
                                    c1, c2, m1, m2)


def orbit_to_csv(record: OrbitRecord) -> str:
    """CSV dump: step, lane, value, symbol."""
    lines = ["step,lane,value,symbol"]
    lane = record.start_lane
    for t, x in enumerate(record.points):
        sym = record.itinerary.symbol(t)
        val = x.serialize() if isinstance(x, Dyadic) else format(float(x), ".17g")
        lines.append(f"{t},{lane},{val},{sym}")
        lane = 2 if lane == 1 else 1
    return "\n".join(lines) + "\n"
