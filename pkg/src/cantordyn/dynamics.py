"""
Dynamical certificates for maps carrying property-(P) or property-(Q) witnesses.

Limit statements (shadowing of infinite pseudo-orbits, liminf/limsup of
distances, omega-limit sets, infinite nested intersections) are replaced by
finite-stage certificates: every returned object states the horizon it was
checked to and the check is exact at that horizon.
"""
from __future__ import annotations

import math
import random
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .approx import ContractViolation
from .core import (Clopen, DepthOverflow, Partition, Point, PrefixMap, apply, compose, dist,
                   fixed_points, image, lcp_len, mesh, min_gap, refinement_map)
from .digraph import ComponentKind, Digraph, build_gr, classify, classify_all
from .generic import ContWitness, HomWitness, check_property_P, check_property_Q

POINT_BUDGET = 4096

SAME_CELL_TAIL = "SAME-CELL-TAIL"
SEPARATED = "SEPARATED"
INCONCLUSIVE_DEPTH = "INCONCLUSIVE-DEPTH"
RESEPARATED = "RESEPARATED"


class OrbitBudget(DepthOverflow):
    """A point of an orbit outgrew the symbol budget."""

    def __init__(self, achieved: int, budget: int):
        self.achieved = achieved
        DepthOverflow.__init__(self, budget + 1, budget, "orbit point")
        self.args = (f"orbit point exceeds {budget} symbols after {achieved} steps",)


class WitnessError(ValueError):
    """The map does not satisfy the witness it was given."""


# ---------------------------------------------------------------------------
# orbits

def trajectory(f: PrefixMap, x: Point, N: int, budget: int = POINT_BUDGET) -> list:
    """``[x, f(x), ..., f^N(x)]``, exactly."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    out = [x]
    for n in range(N):
        x = apply(f, x)
        if x.size() > budget:
            raise OrbitBudget(n + 1, budget)
        out.append(x)
    return out


def itinerary(f: PrefixMap, x: Point, N: int, P: Partition, budget: int = POINT_BUDGET) -> list:
    """Cell indices of ``x, f(x), ..., f^N(x)`` in ``P``."""
    return [P.locate(y) for y in trajectory(f, x, N, budget)]


def _cell_parts(kinds) -> dict:
    """``cell -> (component number, part, 1-based position)``."""
    out = {}
    for ci, k in enumerate(kinds):
        for part in ("u", "v", "w"):
            for i, x in enumerate(getattr(k, part)):
                out[x] = (ci, part, i + 1)
    return out


@lru_cache(maxsize=32)
def _kinds(f: PrefixMap, P: Partition) -> list:
    return [k for _, k in classify_all(build_gr(f, P))]


@lru_cache(maxsize=32)
def _kinds_parts(f: PrefixMap, P: Partition) -> tuple:
    kinds = _kinds(f, P)
    return kinds, _cell_parts(kinds)


@lru_cache(maxsize=32)
def _up(fine: Partition, coarse: Partition):
    return refinement_map(fine, coarse)


def _require_hom(h: PrefixMap, w: HomWitness) -> None:
    v = check_property_P(h, w, 1)
    if not v:
        raise WitnessError(f"witness check failed: {v.reason}")


def _require(f: PrefixMap, w) -> None:
    if isinstance(w, HomWitness):
        _require_hom(f, w)
    else:
        v = check_property_Q(f, w, 1)
        if not v:
            raise WitnessError(f"witness check failed: {v.reason}")


def _left_loop(w: HomWitness, k: ComponentKind):
    u1 = w.P[k.u[0]]
    for a, _ in w.loops:
        if a and a <= u1:
            return a
    return None


# ---------------------------------------------------------------------------
# shadowing

@dataclass(frozen=True)
class PseudoOrbit:
    """Points ``x_start, ..., x_{start+len-1}`` with step error at most ``delta``."""

    points: tuple
    delta: Fraction
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "delta", Fraction(self.delta))
        if not self.points:
            raise ValueError("a pseudo-orbit needs at least one point")

    @property
    def indices(self) -> range:
        return range(self.start, self.start + len(self.points))

    def __getitem__(self, n: int) -> Point:
        return self.points[n - self.start]

    def check(self, f: PrefixMap) -> bool:
        """Whether ``dist(f(x_n), x_{n+1}) <= delta`` for every consecutive pair."""
        return all(dist(apply(f, a), b) <= self.delta for a, b in zip(self.points, self.points[1:]))

    def to_json(self) -> dict:
        return {"start": self.start, "delta": str(self.delta), "points": [p.to_json() for p in self.points]}

    @classmethod
    def from_json(cls, obj) -> "PseudoOrbit":
        return cls(tuple(Point.from_json(p) for p in obj["points"]), Fraction(obj["delta"]),
                   int(obj.get("start", 0)))


def ball_point(rng: random.Random, x: Point, delta, tail: int = 6) -> Point:
    """A random point ``y`` with ``dist(x, y) < delta``."""
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    k = math.floor(1 / delta)  # agreeing on k symbols gives distance below delta
    pre = x.prefix(k) + "".join(rng.choice("01") for _ in range(rng.randint(0, tail)))
    per = "".join(rng.choice("01") for _ in range(rng.randint(1, tail)))
    return Point(pre, per)


def random_pseudo_orbit(rng: random.Random, f: PrefixMap, x: Point, length: int, delta,
                        start: int = 0) -> PseudoOrbit:
    """A ``delta``-pseudo-orbit starting at ``x`` whose every step is a fresh ball point."""
    pts = [x]
    for _ in range(length - 1):
        pts.append(ball_point(rng, apply(f, pts[-1]), delta))
    return PseudoOrbit(tuple(pts), Fraction(delta), start)


def _nearest_in(A: Clopen, x: Point) -> Point:
    """A point of ``A`` agreeing with ``x`` as long as possible."""
    if A.contains_point(x):
        return x
    best = max(A.cyl, key=lambda c: (lcp_len(c, x.prefix(len(c))), -len(c)))
    return x.drop(len(best)).prepend(best)


def _power_preimage(hinv: PrefixMap, A: Clopen, r: int) -> Clopen:
    for _ in range(r):
        A = image(hinv, A)
    return A


def _nested(step, base: Clopen, K: int) -> Clopen:
    """``Y_K`` for ``Y_0 = base``, ``Y_{k+1} = base & step(Y_k)``; stops early once stable."""
    Y = base
    for _ in range(K):
        nxt = base & step(Y)
        if nxt == Y:
            break
        Y = nxt
    return Y


def _walk_points(h: PrefixMap, hinv: PrefixMap, p: Point, at: int, idx: range) -> dict:
    """``{n: h^(n - at)(p)}`` for every ``n`` in ``idx`` and for ``n = 0``."""
    lo, hi = min(idx.start, 0, at), max(idx.stop - 1, 0, at)
    out = {at: p}
    y = p
    for n in range(at + 1, hi + 1):
        y = apply(h, y)
        out[n] = y
    y = p
    for n in range(at - 1, lo - 1, -1):
        y = apply(hinv, y)
        out[n] = y
    return out


def shadow(h: PrefixMap, w: HomWitness, po: PseudoOrbit, eps=None, verify_witness: bool = True) -> Point:
    """A point whose orbit follows ``po`` cell by cell.

    The cell sequence of a ``delta``-pseudo-orbit with ``delta < min_gap(P)``
    is a walk in one dumbbell: it crosses the bar, or stays in the left loop,
    or stays in the right loop.  The returned ``x`` satisfies
    ``h^n(x) in cell(x_n)`` for every index ``n`` of the window (so
    ``dist(x_n, h^n(x)) <= mesh(P)``); this is verified exactly, and when
    ``eps`` is given also ``dist(x_n, h^n(x)) < eps``.

    Raises
    ------
    ValueError
        ``delta`` not below ``min_gap(P)`` or ``po`` not a ``delta``-pseudo-orbit.
    WitnessError
        ``h`` fails the witness check.
    ContractViolation
        The verification fails (never expected).
    """
    P = w.P
    if po.delta >= min_gap(P):
        raise ValueError(f"delta = {po.delta} is not below min_gap = {min_gap(P)}")
    if verify_witness:
        _require_hom(h, w)
    if not po.check(h):
        raise ValueError("the points do not form a delta-pseudo-orbit")
    hinv = h.inverse()
    kinds, parts = _kinds_parts(h, P)
    idx = po.indices
    S = {n: P.locate(po[n]) for n in idx}
    comps = {parts[c][0] for c in S.values()}
    if len(comps) != 1:
        raise ContractViolation("pseudo-orbit cells span two components")
    k = kinds[comps.pop()]
    r, _, t = k.params
    seen = {parts[c][1] for c in S.values()}
    if "v" in seen or seen == {"u", "w"}:
        # bar crossing: every point of a bar cell has the required itinerary
        at = next(n for n in idx if parts[S[n]][1] == "v")
        p, case = po[at], 1
    elif seen == {"u"}:
        # stays in the left loop: a point of the nested preimages of u_1
        i0 = parts[S[idx.start]][2]
        at = idx.start - (i0 - 1)
        K = -(-(idx.stop - 1 - at) // r)
        Y = _nested(lambda A: _power_preimage(hinv, A, r), P[k.u[0]], K)
        p = _nearest_in(Y, po[at]) if at in idx else _nearest_in(Y, po[idx.start])
        case = 2
    else:
        # stays in the right loop: a point of the nested images of w_1 minus h(v_s)
        j = parts[S[idx.stop - 1]][2]
        at = idx.stop - 1 + (1 - j) % t
        K = -(-(at - idx.start) // t)
        E = P[k.w[0]] - image(h, P[k.v[-1]])
        Z = _nested(lambda A: _power_preimage(h, A, t), E, max(K - 1, 0))
        p = _nearest_in(Z, po[at]) if at in idx else _nearest_in(Z, po[idx.stop - 1])
        case = 3
    orbit = _walk_points(h, hinv, p, at, idx)
    eps = None if eps is None else Fraction(eps)
    for n in idx:
        z = orbit[n]
        if P.locate(z) != S[n]:
            raise ContractViolation(f"case {case}: h^{n}(x) leaves the cell of x_{n}")
        if eps is not None and not dist(po[n], z) < eps:
            raise ContractViolation(f"case {case}: dist(x_{n}, h^{n}(x)) = {dist(po[n], z)} is not below {eps}")
    return orbit[0]


def shadow_case(h: PrefixMap, w: HomWitness, po: PseudoOrbit) -> int:
    """Which of the three itinerary shapes (1 bar, 2 left loop, 3 right loop) ``po`` has."""
    kinds, parts = _kinds_parts(h, w.P)
    seen = {parts[w.P.locate(x)][1] for x in po.points}
    return 1 if "v" in seen or seen == {"u", "w"} else (2 if seen == {"u"} else 3)


# ---------------------------------------------------------------------------
# Li-Yorke pairs

@dataclass(frozen=True)
class LiYorkeVerdict:
    """Cell-coincidence pattern of two orbits at the witness scale.

    ``same[n]`` tells whether ``f^n(x)`` and ``f^n(y)`` share a cell.  The
    verdict is ``SAME-CELL-TAIL`` (sharing from ``merge_index`` to the horizon),
    ``SEPARATED`` (apart from ``split_index`` to the horizon),
    ``INCONCLUSIVE-DEPTH`` (orbit budget exhausted) or ``RESEPARATED`` (a split
    after a merge, which a witnessed map never produces).
    """

    verdict: str
    horizon: int
    merge_index: int | None = None
    split_index: int | None = None
    same: tuple = ()

    @property
    def li_yorke_consistent(self) -> bool:
        return self.verdict == RESEPARATED

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "horizon": self.horizon,
                "merge_index": self.merge_index, "split_index": self.split_index}


def li_yorke_exclusion(f: PrefixMap, w, x: Point, y: Point, N: int, budget: int = POINT_BUDGET,
                       verify_witness: bool = True) -> LiYorkeVerdict:
    """Classify the cell-coincidence pattern of the orbits of ``x`` and ``y`` up to ``N``.

    In a dumbbell two orbits in the same cell can separate only once (at the
    exit of the left loop) and can only come together in the right loop,
    which they never leave; in a balloon orbits sharing a cell share cells
    forever.  So at the witness scale liminf 0 forces the distances to stay
    small, and a pair can not be Li-Yorke.  The returned verdict reports the
    pattern; ``RESEPARATED`` would contradict the witness.

    Raises
    ------
    WitnessError
        ``f`` fails the witness check.
    """
    if verify_witness:
        _require(f, w)
    P = w.P
    try:
        a = itinerary(f, x, N, P, budget)
        b = itinerary(f, y, N, P, budget)
    except OrbitBudget as exc:
        return LiYorkeVerdict(INCONCLUSIVE_DEPTH, exc.achieved)
    same = tuple(i == j for i, j in zip(a, b))
    allowed = 1 if isinstance(w, HomWitness) else 0
    splits = 0
    merged = False
    for n in range(1, len(same)):
        if same[n] and not same[n - 1]:
            merged = True
        elif same[n - 1] and not same[n]:
            splits += 1
            if merged or splits > allowed:
                return LiYorkeVerdict(RESEPARATED, N, None, n, same)
    last = len(same) - 1
    run = last
    while run > 0 and same[run - 1] == same[last]:
        run -= 1
    if same[last]:
        return LiYorkeVerdict(SAME_CELL_TAIL, N, run, None, same)
    return LiYorkeVerdict(SEPARATED, N, None, run, same)


def _walks(C: Digraph, v, L: int) -> list:
    out = []

    def go(path):
        if len(path) == L + 1:
            out.append(tuple(path))
            return
        for u in C.succ[path[-1]]:
            path.append(u)
            go(path)
            path.pop()

    go([v])
    return out


def walk_prefix_coincidence(C: Digraph) -> bool:
    """Whether walks from a common vertex disagree during at most one stretch.

    For every vertex ``v`` and every two walks of length ``2|V|`` from ``v``,
    the times where they sit at different vertices must form one interval:
    the walks coincide on a prefix, may split once, and once together again
    they stay together.  This is the graph form of "mapped into different
    vertices only once".  Decided by enumerating the walks.

    Raises
    ------
    ValueError
        ``C`` is not a loop, balloon or dumbbell.
    """
    kind = classify(C)
    if kind.kind not in ("loop", "balloon", "dumbbell"):
        raise ValueError(f"component is {kind.describe()}; expected a loop, balloon or dumbbell")
    L = 2 * len(C.vertices)
    for v in C.vertices:
        ws = _walks(C, v, L)
        for i in range(len(ws)):
            for j in range(i + 1, len(ws)):
                diff = [n for n in range(L + 1) if ws[i][n] != ws[j][n]]
                if diff and diff[-1] - diff[0] + 1 != len(diff):
                    return False
    return True


# ---------------------------------------------------------------------------
# odometers

@dataclass(frozen=True)
class OdometerSpec:
    """Stage data ``alpha`` of an odometer; ``pending`` marks a truncated infinite sequence."""

    alpha: tuple
    pending: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        if any(a < 2 for a in self.alpha):
            raise ValueError("odometer stages must be at least 2")

    @property
    def m(self) -> tuple:
        """The partial products ``m_i = alpha(1) ... alpha(i)``."""
        out, p = [], 1
        for a in self.alpha:
            p *= a
            out.append(p)
        return tuple(out)

    def to_json(self) -> dict:
        return {"alpha": list(self.alpha), "pending": self.pending}


def odometer_step(spec: OdometerSpec, x: Sequence[int]) -> tuple:
    """Add one with carry: ``(x_1, x_2, ...) + (1, 0, 0, ...)`` on the first ``len(x)`` coordinates."""
    if len(x) > len(spec.alpha):
        raise ValueError("more coordinates than stages")
    out = list(x)
    for i, (xi, a) in enumerate(zip(x, spec.alpha)):
        if not 0 <= xi < a:
            raise ValueError(f"coordinate {i + 1} = {xi} is outside Z_{a}")
    for i, a in enumerate(spec.alpha[:len(out)]):
        out[i] += 1
        if out[i] < a:
            break
        out[i] = 0
    return tuple(out)


def _primes(bound: int) -> list:
    return [p for p in range(2, bound + 1) if all(p % d for d in range(2, math.isqrt(p) + 1))]


@dataclass(frozen=True)
class PrimeProfile:
    """``prime -> (count, saturated)``; saturated counts are lower bounds."""

    counts: dict
    bound: int

    def to_json(self) -> dict:
        return {"bound": self.bound,
                "counts": {str(p): {"count": c, "saturated": s} for p, (c, s) in sorted(self.counts.items())}}


def M_profile(spec: OdometerSpec, prime_bound: int) -> PrimeProfile:
    """Prime multiplicities of the stage data for primes up to ``prime_bound``.

    With ``pending`` stages every count is only a lower bound and is flagged
    saturated.
    """
    counts = {}
    for p in _primes(prime_bound):
        c = 0
        for a in spec.alpha:
            while a % p == 0:
                a //= p
                c += 1
        if c or spec.pending:
            counts[p] = (c, spec.pending)
    return PrimeProfile(counts, prime_bound)


def bs_compare(a: PrimeProfile, b: PrimeProfile) -> str:
    """``"equal"``, ``"different"`` or ``"inconclusive"`` on finite data.

    A difference is definite only when the smaller count is exact; any
    saturated prime leaves the comparison inconclusive unless some prime
    already differs definitely.
    """
    verdict = "equal"
    for p in sorted(set(a.counts) | set(b.counts)):
        ca, sa = a.counts.get(p, (0, False))
        cb, sb = b.counts.get(p, (0, False))
        if not sa and not sb:
            if ca != cb:
                return "different"
        elif sa and sb:
            verdict = "inconclusive"
        else:
            exact, sat = (ca, cb) if not sa else (cb, ca)
            if exact < sat:
                return "different"
            verdict = "inconclusive"
    return verdict


# ---------------------------------------------------------------------------
# omega-limit sets

class OrbitUnsettled(ValueError):
    def __init__(self, stage: int, horizon: int):
        self.stage = stage
        self.horizon = horizon
        super().__init__(f"orbit has not settled into a loop at stage {stage} after {horizon} "
                         f"iterations; more iterations are needed")


@dataclass(frozen=True)
class OmegaCovers:
    """Per-stage loop covers of an omega-limit set.

    ``covers[i]`` lists the loop cells of stage ``i + 1`` in orbit order,
    ``sides[i]`` is ``"u"`` or ``"w"`` and ``settle`` the iteration after
    which the orbit stays in the finest loop.
    """

    covers: tuple
    sides: tuple
    alpha: OdometerSpec
    settle: int
    meshes: tuple
    divisibility: tuple

    def to_json(self) -> dict:
        return {"covers": [list(c) for c in self.covers], "sides": list(self.sides),
                "alpha": self.alpha.to_json(), "settle": self.settle,
                "meshes": [str(m) for m in self.meshes],
                "divisibility": [list(d) for d in self.divisibility]}


@lru_cache(maxsize=256)
def _cyclic_check(h: PrefixMap, P: Partition, cells: tuple) -> bool:
    """``h(C_j) & L == C_{j+1} & h(L)`` around the cycle, ``L`` the union of the cells."""
    sets = [P[c] for c in cells]
    L = Clopen._from_ivs([iv for s in sets for iv in s.intervals])
    hL = image(h, L)
    for j, C in enumerate(sets):
        if image(h, C) & L != sets[(j + 1) % len(sets)] & hL:
            return False
    return True


def omega_covers(h: PrefixMap, witnesses: Sequence[HomWitness], x: Point, stages: int | None = None,
                 horizon: int | None = None, budget: int = POINT_BUDGET) -> OmegaCovers:
    """Stage covers of ``omega(x, h)`` cyclically permuted by ``h``.

    The orbit settles in the finest stage when it reaches the right loop
    (absorbing) or the recorded left loop set (invariant under ``h^{q!}``).
    Coarser covers are the loops holding the finest one.  Checked exactly:
    each cover is cyclically permuted (image of a cell inside the loop equals
    the next cell inside the loop's image), covers refine each other, sizes
    multiply by ``alpha(i) = q_i!/q_{i-1}!``, and ``m!`` divides
    ``q_{m+1}!/q_m!``; meshes are reported for the nested-intersection
    condition.

    Raises
    ------
    ValueError
        Fewer witnesses than ``stages``.
    OrbitUnsettled
        The orbit did not settle within ``horizon`` iterations.
    ContractViolation
        A cover check fails.
    """
    N = len(witnesses) if stages is None else stages
    if N < 1 or N > len(witnesses):
        raise ValueError(f"{N} stages requested but {len(witnesses)} witnesses given")
    ws = list(witnesses[:N])
    fine = ws[-1]
    kinds, parts = _kinds_parts(h, fine.P)
    if horizon is None:
        horizon = 64 * max(sum(k.params) for k in kinds)
    ci = parts[fine.P.locate(x)][0]
    k = kinds[ci]
    a = _left_loop(fine, k)
    y, side, settle = x, None, None
    for n in range(horizon + 1):
        _, part, _ = parts[fine.P.locate(y)]
        if part == "w":
            side, settle = "w", n
            break
        if part == "u" and a is not None and a.contains_point(y):
            side, settle = "u", n
            break
        y = apply(h, y)
        if y.size() > budget:
            raise OrbitBudget(n + 1, budget)
    if side is None:
        raise OrbitUnsettled(N, horizon)
    covers = [None] * N
    sides = [None] * N
    covers[-1] = getattr(k, side)
    sides[-1] = side
    for i in range(N - 2, -1, -1):
        Pi = ws[i].P
        up = _up(ws[i + 1].P, Pi)
        if up is None:
            raise ContractViolation(f"witness {i + 2} does not refine witness {i + 1}")
        ki, pi = _kinds_parts(h, Pi)
        tops = {up[c] for c in covers[i + 1]}
        where = {(pi[c][0], pi[c][1]) for c in tops}
        if len(where) != 1:
            raise ContractViolation(f"stage {i + 2} loop is not inside one loop of stage {i + 1}")
        cj, sd = where.pop()
        if sd == "v":
            raise ContractViolation(f"stage {i + 2} loop meets a bar at stage {i + 1}")
        covers[i] = getattr(ki[cj], sd)
        sides[i] = sd
    alpha = [ws[0].weight] + [ws[i].weight // ws[i - 1].weight for i in range(1, N)]
    for i in range(N):
        if not _cyclic_check(h, ws[i].P, tuple(covers[i])):
            raise ContractViolation(f"stage {i + 1} cover is not cyclically permuted")
        want = math.prod(alpha[:i + 1])
        if len(covers[i]) != want:
            raise ContractViolation(f"stage {i + 1} cover has {len(covers[i])} cells, expected {want}")
    div = []
    for m in range(1, N):
        num = math.factorial(ws[m].q) // math.factorial(ws[m - 1].q)
        ok = num % math.factorial(m) == 0
        if not ok:
            raise ContractViolation(f"{m}! does not divide q_{m + 1}!/q_{m}!")
        div.append((m, num, ok))
    meshes = tuple(mesh(ws[i].P[c] for c in covers[i]) for i in range(N))
    return OmegaCovers(tuple(tuple(c) for c in covers), tuple(sides), OdometerSpec(tuple(alpha), True),
                       settle, meshes, tuple(div))


# ---------------------------------------------------------------------------
# recurrence

@dataclass(frozen=True)
class NonrecurrenceCertificate:
    """``A = h^offset(v)`` for the bar cell ``v``; every point of ``A`` is nonrecurrent.

    ``itinerary`` lists the cells of ``h^n(v)`` for ``n = 0..horizon``; it
    never revisits ``v`` and ends in the right loop, which has no edge out,
    so ``h^n(v)`` misses ``v`` for all ``n >= 1`` and hence
    ``h^n(A)`` misses ``A``.
    """

    component: int
    bar_cell: int
    offset: int
    cell: int
    set: Clopen
    itinerary: tuple
    horizon: int


@dataclass(frozen=True)
class RecurrenceReport:
    nonrecurrent: tuple
    loop_cells: tuple
    periodic_bound: int
    periodic_points: tuple

    def to_json(self) -> dict:
        return {"nonrecurrent": [{"component": c.component, "bar_cell": c.bar_cell, "offset": c.offset,
                                  "cell": c.cell, "set": c.set.to_json(), "horizon": c.horizon,
                                  "itinerary": list(c.itinerary)} for c in self.nonrecurrent],
                "loop_cells": [list(x) for x in self.loop_cells],
                "periodic_bound": self.periodic_bound,
                "periodic_points": [{"period": n, "rule": s, "point": p if isinstance(p, str) else p.to_json()}
                                    for n, s, p in self.periodic_points]}


def periodic_points(h: PrefixMap, max_period: int) -> list:
    """``(n, rule source, point)`` for fixed points of ``h^n``, ``n = 1..max_period``.

    A fixed cylinder is reported as the string ``"cylinder"``.
    """
    out = []
    hn = None
    for n in range(1, max_period + 1):
        hn = h if hn is None else compose(hn, h)
        out.extend((n, s, p) for s, p in fixed_points(hn))
    return out


def recurrence_report(h: PrefixMap, w: HomWitness, periodic_bound: int | None = None,
                      verify_witness: bool = True) -> RecurrenceReport:
    """Nonrecurrent cell families and loop regions of every dumbbell.

    For a dumbbell with bar ``v_1..v_s`` the sets ``h^-r(v_1), ..., h^-1(v_1)``,
    ``v_1, ..., v_s`` and ``h(v_s), ..., h^t(v_s)`` consist of nonrecurrent
    points; each comes with the itinerary of its bar cell up to the escape
    horizon ``r + s + t``, checked with exact images.  Loop cells are reported
    as the region where recurrence is possible.  Fixed points of ``h^n`` for
    ``n <= periodic_bound`` (default ``4 q!``) are searched exactly.
    """
    if verify_witness:
        _require_hom(h, w)
    P = w.P
    hinv = h.inverse()
    kinds = _kinds(h, P)
    certs, loops = [], []
    for ci, k in enumerate(kinds):
        r, s, t = k.params
        H = r + s + t
        absorbing = set(k.w)
        loops.append(tuple(k.u) + tuple(k.w))
        for j, v in enumerate(k.v):
            X = P[v]
            itin = [v]
            for _ in range(H):
                X = image(h, X)
                cs = P.cells_meeting(X)
                if len(cs) != 1:
                    raise ContractViolation("image of a bar cell meets two cells")
                itin.append(cs.pop())
            if v in itin[1:] or itin[-1] not in absorbing:
                raise ContractViolation(f"bar cell {v} is not certified nonrecurrent")
            offsets = [0]
            if j == 0:
                offsets = list(range(-r, 1))
            if j == s - 1:
                offsets = offsets + list(range(1, t + 1))
            for off in offsets:
                A = P[v]
                step = h if off > 0 else hinv
                for _ in range(abs(off)):
                    A = image(step, A)
                cs = P.cells_meeting(A)
                if len(cs) != 1:
                    raise ContractViolation("a nonrecurrent set meets two cells")
                certs.append(NonrecurrenceCertificate(ci, v, off, cs.pop(), A, tuple(itin), H))
    bound = 4 * w.weight if periodic_bound is None else periodic_bound
    pts = periodic_points(h, bound) if bound else []
    return RecurrenceReport(tuple(certs), tuple(loops), bound, tuple(pts))


# ---------------------------------------------------------------------------
# chain continuity

def chain_violations(f: PrefixMap, x: Point, delta, eps, chains: int = 100, length: int = 50,
                     seed: int = 0) -> int:
    """Number of sampled ``delta``-chains from ``x`` leaving the ``eps``-tube of the orbit."""
    rng = random.Random(seed)
    orbit = trajectory(f, x, length - 1)
    eps = Fraction(eps)
    bad = 0
    for _ in range(chains):
        y = ball_point(rng, x, delta)
        for n in range(length):
            if not dist(y, orbit[n]) < eps:
                bad += 1
                break
            y = ball_point(rng, apply(f, y), delta)
    return bad


def _depth_radius(A: Clopen) -> Fraction:
    """A radius whose balls around points of ``A`` stay in ``A``."""
    return Fraction(1, max(A.depth(), 1))


def chain_modulus(f: PrefixMap, w, x: Point, eps, chains: int = 100, length: int = 50, seed: int = 0,
                  horizon: int | None = None) -> Fraction:
    """A ``delta`` such that ``delta``-chains from ``x`` stay ``eps``-close to its orbit.

    ``w`` is a witness or a sequence of witnesses; the first one with mesh
    below ``eps`` is used.  For a property-(Q) witness ``delta = min_gap(P)``
    works at every point.  For a property-(P) witness ``x`` must be
    nonrecurrent at the witness scale: in the bar or right loop
    ``delta = min_gap(P)``; in the left loop ``delta`` is further limited so
    that chains follow the nested preimages of ``v_1`` until the orbit of
    ``x`` escapes.  The result is spot-checked on ``chains`` sampled chains
    (pass ``chains=0`` to skip).

    Raises
    ------
    ValueError
        No witness has mesh below ``eps``, or ``x`` is in a left loop and not
        certified nonrecurrent.
    ContractViolation
        A sampled chain leaves the tube.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    ws = [w] if isinstance(w, (HomWitness, ContWitness)) else list(w)
    use = next((v for v in ws if mesh(v.P.cells) < eps), None)
    if use is None:
        raise ValueError(f"no witness has mesh below {eps}")
    P = use.P
    delta = min_gap(P)
    if isinstance(use, HomWitness):
        kinds, parts = _kinds_parts(f, P)
        ci, part, _ = parts[P.locate(x)]
        if part == "u":
            k = kinds[ci]
            a = _left_loop(use, k)
            H = horizon if horizon is not None else 64 * sum(k.params)
            y, steps = x, None
            for n in range(H + 1):
                if parts[P.locate(y)][1] == "v":
                    steps = n
                    break
                if a is not None and a.contains_point(y):
                    break
                y = apply(f, y)
            if steps is None:
                raise ValueError("not certified nonrecurrent: the orbit does not leave the left loop")
            finv = f.inverse()
            A = P[k.v[0]]
            for _ in range(steps + 1):
                delta = min(delta, _depth_radius(A))
                A = image(finv, A)
    if chains:
        bad = chain_violations(f, x, delta, eps, chains, length, seed)
        if bad:
            raise ContractViolation(f"{bad} sampled chains leave the {eps}-tube")
    return delta


# ---------------------------------------------------------------------------
# non-equicontinuity

@dataclass(frozen=True)
class DefectCertificate:
    """Two nearby points of a left loop, one staying ``N r`` steps and one leaving.

    ``Y`` is ``u_1 & h^-r(u_1) & ... & h^-Nr(u_1)``; ``y`` lies in ``Y`` and
    ``y2`` (when ``N > 0``) in ``u_1 - Y`` with ``dist(y, y2) = closeness``,
    the diameter of the smallest cylinder holding both.  At step ``exit_step``
    the orbit of ``y2`` is in the bar while that of ``y`` is in the loop, at
    distance ``separation >= min_gap(P)``.
    """

    N: int
    r: int
    Y: Clopen
    y: Point
    y2: Point | None
    closeness: Fraction | None
    exit_step: int | None
    separation: Fraction | None

    def to_json(self) -> dict:
        return {"N": self.N, "r": self.r, "Y": self.Y.to_json(), "y": self.y.to_json(),
                "y2": None if self.y2 is None else self.y2.to_json(),
                "closeness": None if self.closeness is None else str(self.closeness),
                "exit_step": self.exit_step,
                "separation": None if self.separation is None else str(self.separation)}


def equicontinuity_defect(h: PrefixMap, w: HomWitness, D=0, N: int = 3, budget: int = 100000,
                          verify_witness: bool = True) -> DefectCertificate:
    """Finite-stage certificate of non-equicontinuity in the left loop of dumbbell ``D``.

    ``D`` is a component index (in ``classify_all`` order) or a
    ``ComponentKind``.

    Raises
    ------
    DepthOverflow
        ``N r`` exceeds ``budget``.
    """
    if verify_witness:
        _require_hom(h, w)
    P = w.P
    kinds = _kinds(h, P)
    k = D if isinstance(D, ComponentKind) else kinds[D]
    r = k.params[0]
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N * r > budget:
        raise DepthOverflow(N * r, budget, "defect horizon")
    hinv = h.inverse()
    u1 = P[k.u[0]]
    Y = _nested(lambda A: _power_preimage(hinv, A, r), u1, N)
    if not Y:
        raise ContractViolation("nested preimage set is empty")
    if N == 0:
        return DefectCertificate(0, r, Y, Point(Y.first_word(), "0"), None, None, None, None)
    rest = u1 - Y
    rows = sorted([(c, 0) for c in Y.cyl] + [(c, 1) for c in rest.cyl])
    best = None
    for (c1, s1), (c2, s2) in zip(rows, rows[1:]):
        if s1 != s2:
            ell = lcp_len(c1, c2)
            if best is None or ell > best[0]:
                best = (ell, c1, c2) if s1 == 0 else (ell, c2, c1)
    ell, cy, cz = best
    y, y2 = Point(cy, "0"), Point(cz, "0")
    loop = set(k.u)
    parts_y = itinerary(h, y, N * r, P)
    parts_z = itinerary(h, y2, N * r, P)
    if any(c not in loop for c in parts_y):
        raise ContractViolation("the point of Y leaves the loop")
    bar = set(k.v)
    exit_step = next((n for n, c in enumerate(parts_z) if c in bar), None)
    if exit_step is None:
        raise ContractViolation("the companion point does not leave the loop")
    ty = trajectory(h, y, exit_step)[-1]
    tz = trajectory(h, y2, exit_step)[-1]
    sep = dist(ty, tz)
    if sep < min_gap(P):
        raise ContractViolation("separation below the cell gap")
    return DefectCertificate(N, r, Y, y, y2, dist(y, y2), exit_step, sep)
