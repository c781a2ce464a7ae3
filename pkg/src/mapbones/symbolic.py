"""Symbolic dynamics for alternating pairs of (+,-) unimodal interval maps.

Symbols live in two lanes, one per interval copy; itineraries alternate
lanes and may carry an eventual period.  Order data is a pair of
permutations recording how a periodic orbit's points in one lane map to
the points of the other, sorted by position.  The composed map is 3-modal,
so kneading sequences use a separate seven-letter alphabet.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cmp_to_key
from math import lcm
from typing import Optional

from .errors import DomainError

LT, EQ, GT = -1, 0, 1
INCOMPARABLE = None

_KIND_ORDER = {"L": 0, "C": 1, "R": 2}


@dataclass(frozen=True)
class Symbol:
    """One itinerary letter: lane 1 or 2, position kind L / C / R."""

    lane: int
    kind: str

    def __post_init__(self):
        if self.lane not in (1, 2) or self.kind not in _KIND_ORDER:
            raise DomainError(f"bad symbol ({self.lane!r}, {self.kind!r})")

    def __str__(self):
        return ("G" if self.kind == "C" else self.kind) + str(self.lane)


L1, G1, R1 = Symbol(1, "L"), Symbol(1, "C"), Symbol(1, "R")
L2, G2, R2 = Symbol(2, "L"), Symbol(2, "C"), Symbol(2, "R")


def parse_symbol(text: str) -> Symbol:
    kind, lane = text[:-1], int(text[-1])
    return Symbol(lane, "C" if kind == "G" else kind)


@dataclass(frozen=True)
class Itinerary:
    """Lane-alternating symbol sequence with an optional eventual period.

    ``per == ()`` means a finite prefix only (a truncation).  The period
    length is even whenever nonempty so the lane pattern repeats.
    """

    pre: tuple
    per: tuple

    def __post_init__(self):
        syms = self.pre + self.per
        if not syms:
            raise DomainError("empty itinerary")
        for a, b in zip(syms, syms[1:]):
            if b.lane == a.lane:
                raise DomainError("lanes must alternate")
        if self.per and len(self.per) % 2 != 0:
            raise DomainError("period length must be even")

    def start_lane(self) -> int:
        return (self.pre + self.per)[0].lane

    def symbol(self, k: int) -> Optional[Symbol]:
        if k < len(self.pre):
            return self.pre[k]
        if self.per:
            return self.per[(k - len(self.pre)) % len(self.per)]
        return None

    def is_periodic(self) -> bool:
        return not self.pre and bool(self.per)

    def horizon(self) -> int:
        return len(self.pre) + len(self.per)

    def normalize(self) -> "Itinerary":
        """Minimal period, preperiod tail absorbed into the cycle."""
        pre, per = list(self.pre), list(self.per)
        if per:
            q = len(per)
            for d in range(2, q, 2):
                if q % d == 0 and per == per[:d] * (q // d):
                    per = per[:d]
                    break
            while pre and pre[-1] == per[-1]:
                per = [per[-1]] + per[:-1]
                pre.pop()
        return Itinerary(tuple(pre), tuple(per))

    def truncate(self, count: int) -> "Itinerary":
        """First ``count`` symbols as a finite itinerary."""
        syms = [self.symbol(k) for k in range(count)]
        syms = [s for s in syms if s is not None]
        return Itinerary(tuple(syms), ())

    def serialize(self) -> str:
        head = " ".join(str(s) for s in self.pre)
        if not self.per:
            return head
        tail = " ".join(str(s) for s in self.per)
        return f"{head} | {tail}" if head else f"| {tail}"

    @staticmethod
    def parse(text: str) -> "Itinerary":
        if "|" in text:
            head, tail = text.split("|")
        else:
            head, tail = text, ""
        pre = tuple(parse_symbol(t) for t in head.split())
        per = tuple(parse_symbol(t) for t in tail.split())
        return Itinerary(pre, per)

    def __str__(self):
        return self.serialize()


def _compare_horizon(a: Itinerary, b: Itinerary) -> int:
    qa, qb = len(a.per), len(b.per)
    if qa and qb:
        return max(len(a.pre), len(b.pre)) + lcm(qa, qb) + 1
    # at least one finite prefix: comparison stops at its end anyway
    na = len(a.pre) if qa == 0 else None
    nb = len(b.pre) if qb == 0 else None
    return min(x for x in (na, nb) if x is not None)


def compare_itineraries(a: Itinerary, b: Itinerary) -> int:
    """Total order on itineraries, consistent with the real line.

    At the first differing symbol compare by L < C < R, then flip the
    verdict iff an odd number of R symbols precedes that position (each R
    marks passage through a decreasing lap).  Finite truncations that agree
    over the common prefix compare EQ.
    """
    if a.start_lane() != b.start_lane():
        raise DomainError("itineraries start in different lanes")
    flips = 0
    shared_critical = False
    for k in range(_compare_horizon(a, b)):
        sa, sb = a.symbol(k), b.symbol(k)
        if sa is None or sb is None:
            return EQ
        if sa != sb:
            if shared_critical:
                raise DomainError(
                    "sequences diverge after a shared critical symbol")
            verdict = LT if _KIND_ORDER[sa.kind] < _KIND_ORDER[sb.kind] else GT
            return -verdict if flips % 2 else verdict
        if sa.kind == "R":
            flips += 1
        elif sa.kind == "C" and k > 0:
            # a shared critical start is fine (both sequences based there);
            # agreement through a later critical symbol pins the whole tail
            shared_critical = True
    return EQ


# ---------------------------------------------------------------------------
# Order data


@dataclass(frozen=True)
class OrderData:
    """Pair of permutations (sigma, tau) in one-line notation, 1-based."""

    sigma: tuple
    tau: tuple

    def __post_init__(self):
        n = len(self.sigma)
        if sorted(self.sigma) != list(range(1, n + 1)) or \
           sorted(self.tau) != list(range(1, n + 1)):
            raise DomainError("sigma and tau must be permutations of equal size")

    @property
    def size(self) -> int:
        return len(self.sigma)

    def transpose(self) -> "OrderData":
        return OrderData(self.tau, self.sigma)

    def serialize(self) -> str:
        s = ",".join(map(str, self.sigma))
        t = ",".join(map(str, self.tau))
        return f"s=[{s}];t=[{t}]"

    @staticmethod
    def parse(text: str) -> "OrderData":
        s_part, t_part = text.split(";")
        sigma = tuple(int(x) for x in s_part.split("[")[1].rstrip("]").split(","))
        tau = tuple(int(x) for x in t_part.split("[")[1].rstrip("]").split(","))
        return OrderData(sigma, tau)

    def __str__(self):
        return self.serialize()


def _unimodal_pattern(p) -> bool:
    # increasing run followed by a strictly decreasing run
    descending = False
    for a, b in zip(p, p[1:]):
        if b < a:
            descending = True
        elif descending:
            return False
    return True


def _lane1_cycles(sigma, tau):
    n = len(sigma)
    seen = [False] * n
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        cyc, i = [], start
        while not seen[i]:
            seen[i] = True
            cyc.append(i + 1)
            i = tau[sigma[i] - 1] - 1
        cycles.append(tuple(cyc))
    return cycles


def check_admissible(od: OrderData) -> bool:
    """Both monotone-run conditions hold and tau after sigma is one cycle."""
    return (_unimodal_pattern(od.sigma) and _unimodal_pattern(od.tau)
            and len(_lane1_cycles(od.sigma, od.tau)) == 1)


def admissible_order_data(n: int) -> list:
    """All admissible order data in S_n x S_n, lexicographic one-line order."""
    if n < 1:
        raise DomainError("n must be >= 1")
    out = []
    perms = list(itertools.permutations(range(1, n + 1)))
    for sigma in perms:
        if not _unimodal_pattern(sigma):
            continue
        for tau in perms:
            if not _unimodal_pattern(tau):
                continue
            if len(_lane1_cycles(sigma, tau)) == 1:
                out.append(OrderData(sigma, tau))
    return out


def _rel(i: int, center: int) -> str:
    return "L" if i < center else ("C" if i == center else "R")


def order_data_to_bicritical_itinerary(od: OrderData) -> Itinerary:
    """Period-2n itinerary of the bicritical orbit carrying this order data.

    The top lane-2 point is the image of the first folding point and the
    top lane-1 point the image of the second, which pins both critical
    ranks; symbols then read off the cycle.
    """
    if not check_admissible(od):
        raise DomainError(f"inadmissible order data {od}")
    n = od.size
    i_star = od.sigma.index(n) + 1
    j_star = od.tau.index(n) + 1
    syms = []
    i = i_star
    for _ in range(n):
        syms.append(Symbol(1, _rel(i, i_star)))
        j = od.sigma[i - 1]
        syms.append(Symbol(2, _rel(j, j_star)))
        i = od.tau[j - 1]
    return Itinerary((), tuple(syms))


def itinerary_to_order_data(it: Itinerary) -> OrderData:
    """Inverse of :func:`order_data_to_bicritical_itinerary`.

    Ranks the cyclic shifts within each lane by itinerary order to recover
    the point ranks, then reads off both permutations.
    """
    it = it.normalize()
    if it.pre or not it.per:
        raise DomainError("itinerary must be purely periodic")
    per = it.per
    two_n = len(per)
    n = two_n // 2
    for lane in (1, 2):
        hits = sum(1 for s in per if s.lane == lane and s.kind == "C")
        if hits != 1:
            raise DomainError(f"need exactly one critical symbol in lane {lane}")
    shifts = [Itinerary((), per[k:] + per[:k]) for k in range(two_n)]

    def ranks(lane):
        ks = [k for k in range(two_n) if per[k].lane == lane]
        ks.sort(key=cmp_to_key(lambda p, q: compare_itineraries(shifts[p], shifts[q])))
        return {k: r + 1 for r, k in enumerate(ks)}

    rank1, rank2 = ranks(1), ranks(2)
    sigma, tau = [0] * n, [0] * n
    for k, r in rank1.items():
        sigma[r - 1] = rank2[(k + 1) % two_n]
    for k, r in rank2.items():
        tau[r - 1] = rank1[(k + 1) % two_n]
    od = OrderData(tuple(sigma), tuple(tau))
    if not check_admissible(od):
        raise DomainError("recovered order data is not admissible")
    return od


# ---------------------------------------------------------------------------
# Joint order data (two disjoint periodic orbits)


@dataclass(frozen=True)
class JointOrderData:
    """Order data of two disjoint orbits together with their interleaving."""

    sigma: tuple
    tau: tuple

    def __post_init__(self):
        n = len(self.sigma)
        if sorted(self.sigma) != list(range(1, n + 1)) or \
           sorted(self.tau) != list(range(1, n + 1)):
            raise DomainError("sigma and tau must be permutations of equal size")

    @property
    def size(self) -> int:
        return len(self.sigma)

    def transpose(self) -> "JointOrderData":
        return JointOrderData(self.tau, self.sigma)

    def serialize(self) -> str:
        s = ",".join(map(str, self.sigma))
        t = ",".join(map(str, self.tau))
        return f"s=[{s}];t=[{t}]"

    def lane1_blocks(self):
        """Lane-1 index blocks (first-orbit block first) or None."""
        N = self.size
        cycles = _lane1_cycles(self.sigma, self.tau)
        if len(cycles) != 2:
            return None
        g1 = self.sigma.index(N) + 1          # lane-1 rank of first folding point
        g2_img = N                            # lane-1 rank of the second folding value
        c1 = next((c for c in cycles if g1 in c), None)
        c2 = next((c for c in cycles if g2_img in c), None)
        if c1 is None or c2 is None or c1 == c2:
            return None
        return c1, c2

    def split(self):
        blocks = self.lane1_blocks()
        if blocks is None:
            raise DomainError("joint order data does not split into two orbits")
        return len(blocks[0]), len(blocks[1])

    def block_order_data(self):
        """Restrict each orbit block and relabel ranks order-preservingly."""
        blocks = self.lane1_blocks()
        if blocks is None:
            raise DomainError("joint order data does not split into two orbits")
        out = []
        for block in blocks:
            xs = sorted(block)
            ys = sorted(self.sigma[i - 1] for i in block)
            xr = {i: r + 1 for r, i in enumerate(xs)}
            yr = {j: r + 1 for r, j in enumerate(ys)}
            sigma = tuple(yr[self.sigma[i - 1]] for i in xs)
            tau = tuple(xr[self.tau[j - 1]] for j in ys)
            out.append(OrderData(sigma, tau))
        return tuple(out)

    def __str__(self):
        return self.serialize()


def check_admissible_joint(jod: JointOrderData) -> bool:
    """Monotone-run conditions, a two-cycle split, both blocks admissible."""
    if not (_unimodal_pattern(jod.sigma) and _unimodal_pattern(jod.tau)):
        return False
    if jod.lane1_blocks() is None:
        return False
    od1, od2 = jod.block_order_data()
    return check_admissible(od1) and check_admissible(od2)


def joint_itineraries(jod: JointOrderData):
    """Periodic itineraries of the two critical points for this joint data."""
    if not check_admissible_joint(jod):
        raise DomainError(f"inadmissible joint order data {jod}")
    N = jod.size
    i_star = jod.sigma.index(N) + 1
    j_star = jod.tau.index(N) + 1
    blocks = jod.lane1_blocks()

    def walk(start_lane1_index, length):
        syms = []
        i = start_lane1_index
        for _ in range(length):
            syms.append(Symbol(1, _rel(i, i_star)))
            j = jod.sigma[i - 1]
            syms.append(Symbol(2, _rel(j, j_star)))
            i = jod.tau[j - 1]
        return syms

    it1 = Itinerary((), tuple(walk(i_star, len(blocks[0]))))
    # second orbit starts at gamma2, i.e. half a step before its lane-1 image N
    tail = walk(N, len(blocks[1]))
    syms2 = (Symbol(2, "C"),) + tuple(tail[:-1])
    it2 = Itinerary((), syms2)
    return it1, it2


# ---------------------------------------------------------------------------
# Kneading data of the 3-modal composition

K_NAMES = ("H0", "c1", "H1", "c2", "H2", "c3", "H3")
K_INDEX = {name: i for i, name in enumerate(K_NAMES)}
K_SIGN = (1, 0, -1, 0, 1, 0, -1)


@dataclass(frozen=True)
class KneadingSequence:
    """Eventually periodic word over the 3-modal alphabet (index-coded)."""

    pre: tuple
    per: tuple

    def symbol(self, k: int) -> Optional[int]:
        if k < len(self.pre):
            return self.pre[k]
        if self.per:
            return self.per[(k - len(self.pre)) % len(self.per)]
        return None

    def normalize(self) -> "KneadingSequence":
        pre, per = list(self.pre), list(self.per)
        if per:
            q = len(per)
            for d in range(1, q):
                if q % d == 0 and per == per[:d] * (q // d):
                    per = per[:d]
                    break
            while pre and pre[-1] == per[-1]:
                per = [per[-1]] + per[:-1]
                pre.pop()
        return KneadingSequence(tuple(pre), tuple(per))

    def serialize(self) -> str:
        head = " ".join(K_NAMES[i] for i in self.pre)
        if not self.per:
            return head
        tail = " ".join(K_NAMES[i] for i in self.per)
        return f"{head} | {tail}" if head else f"| {tail}"

    def __str__(self):
        return self.serialize()


def _kseq_horizon(a: KneadingSequence, b: KneadingSequence) -> int:
    qa, qb = len(a.per), len(b.per)
    if qa and qb:
        return max(len(a.pre), len(b.pre)) + lcm(qa, qb) + 1
    na = len(a.pre) if qa == 0 else None
    nb = len(b.pre) if qb == 0 else None
    return min(x for x in (na, nb) if x is not None)


def compare_ksequences(a: KneadingSequence, b: KneadingSequence) -> int:
    """Signed order on 3-modal words: flip after an odd count of minus-laps."""
    sign = 1
    shared_critical = False
    for k in range(_kseq_horizon(a, b)):
        sa, sb = a.symbol(k), b.symbol(k)
        if sa is None or sb is None:
            return EQ
        if sa != sb:
            if shared_critical:
                raise DomainError(
                    "sequences diverge after a shared critical symbol")
            return sign * (LT if sa < sb else GT)
        s = K_SIGN[sa]
        if s < 0:
            sign = -sign
        elif s == 0 and k > 0:
            shared_critical = True
    return EQ


@dataclass(frozen=True)
class KneadingData:
    """Kneading sequences of the composed map; outer pair absent when 1-modal."""

    k1: Optional[KneadingSequence]
    k2: KneadingSequence
    k3: Optional[KneadingSequence]
    modality: str  # "trimodal" or "unimodal"


def _pair_to_modal(s1: Symbol, s2: Symbol) -> int:
    """3-modal letter of a lane-1 point from its two pair symbols.

    ``s1`` locates the point against the inner folding point, ``s2`` locates
    its image against the second one (the outer folding points are exactly
    the preimages of the second critical point).
    """
    if s1.kind == "C":
        return K_INDEX["c2"]
    if s2.kind == "R":
        return K_INDEX["H1"] if s1.kind == "L" else K_INDEX["H2"]
    if s2.kind == "C":
        return K_INDEX["c1"] if s1.kind == "L" else K_INDEX["c3"]
    return K_INDEX["H0"] if s1.kind == "L" else K_INDEX["H3"]


def _transport(it: Itinerary, start: int) -> KneadingSequence:
    """Group pair symbols two at a time from ``start`` into 3-modal letters."""
    q = len(it.per)
    if q:
        pre_len = max(0, -(-max(0, len(it.pre) - start) // 2))
        per_len = q // 2
        total = pre_len + per_len
    else:
        pre_len = total = max(0, (len(it.pre) - start) // 2)
        per_len = 0
    out = []
    for t in range(total):
        s1 = it.symbol(start + 2 * t)
        s2 = it.symbol(start + 2 * t + 1)
        out.append(_pair_to_modal(s1, s2))
    return KneadingSequence(tuple(out[:pre_len]), tuple(out[pre_len:])).normalize()


def kneading_from_pair_itineraries(it1: Itinerary, it2: Itinerary,
                                   modality_context: str = "trimodal") -> KneadingData:
    """Kneading data of the composition from the two critical itineraries.

    The middle sequence follows the first critical orbit from its second
    image on; the outer two follow the second critical orbit shifted by one
    and coincide because both outer folding points share a critical value.
    """
    if it1.start_lane() != 1 or it2.start_lane() != 2:
        raise DomainError("expected itineraries of gamma1 (lane 1) and gamma2 (lane 2)")
    if modality_context not in ("trimodal", "unimodal"):
        raise DomainError(f"unknown modality context {modality_context!r}")
    k2 = _transport(it1, 2)
    if modality_context == "unimodal":
        return KneadingData(None, k2, None, "unimodal")
    k1 = _transport(it2, 1)
    return KneadingData(k1, k2, k1, "trimodal")


def compare_kneading(a: KneadingData, b: KneadingData):
    """Componentwise signed comparison; LT/GT need one strict component."""
    if a.modality != b.modality:
        raise DomainError("kneading data of different modality")
    pairs = [(a.k2, b.k2)]
    if a.modality == "trimodal":
        pairs = [(a.k1, b.k1), (a.k2, b.k2), (a.k3, b.k3)]
    comps = [compare_ksequences(x, y) for x, y in pairs]
    if all(c == EQ for c in comps):
        return EQ
    if all(c <= EQ for c in comps):
        return LT
    if all(c >= EQ for c in comps):
        return GT
    return INCOMPARABLE


def is_tight_st(sequence: Itinerary, params) -> bool:
    """No orbit point sits strictly inside a plateau away from its center.

    The orbit simulated is that of the folding point in the sequence's
    starting lane, in exact dyadic arithmetic.
    """
    from .families import Dyadic, ParamPoint, pair_orbit

    v, w = params
    v = v if isinstance(v, Dyadic) else Dyadic.from_value(v)
    w = w if isinstance(w, Dyadic) else Dyadic.from_value(w)
    p = ParamPoint(v, w, "st")
    steps = max(2 * sequence.horizon() + 4, 64)
    rec = pair_orbit(p, Dyadic(1, 1), max_steps=steps,
                     start_lane=sequence.start_lane())
    half = Dyadic(1, 1)
    one = Dyadic(1, 0)
    span = rec.status.preperiod + rec.status.period if rec.status.period else len(rec.points) - 1
    for t in range(span):
        x = rec.points[t]
        lane = 1 if (t % 2 == 0) == (sequence.start_lane() == 1) else 2
        height = v if lane == 1 else w
        lo = height.halve()
        hi = one - lo
        if lo < x < hi and x != half:
            return False
    return True
