"""
Finite-stage witnesses for the generic homeomorphism and the generic
continuous map.

A homeomorphism ``h`` has property (P) at level ``m`` when some partition of
mesh below ``1/m`` turns every component of ``gr(h, P)`` into a balanced
dumbbell of plate weight ``q!`` (``q`` a multiple of ``m``) that carries a left
and a right loop.  The continuous analogue (Q) asks for strict balloons of
type ``(q!, q!)``.  ``generic_hom`` and ``generic_cont`` build maps carrying
nested witnesses for ``m = 1..m_max`` and the checkers verify them exactly.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .approx import ContractViolation, realize, split_clopen
from .core import (Clopen, DepthOverflow, Partition, PrefixMap, clopen_bijection, compose, image,
                   mesh, preimage, refinement_map, restrict_rules, union_all)
from .digraph import ComponentKind, Digraph, build_gr, classify, classify_all
from .sampling import prefix_code
from .verdict import PASS, Verdict

#: Largest plate weight ``q!`` the generators will build (cells per loop).
MAX_PLATE = 720


class StageOverflow(DepthOverflow):
    """The requested number of stages is beyond the feasible budget."""

    def __init__(self, m_max: int, feasible: int, why: str):
        self.m_max = m_max
        self.feasible = feasible
        ArithmeticError.__init__(self, f"m_max = {m_max} is not feasible ({why}); "
                                       f"the maximal achievable m_max is {feasible}")
        self.needed = m_max
        self.cap = feasible


def q_schedule(m_max: int) -> list:
    """The stage parameters ``q_1, ..., q_m_max``.

    ``q_m`` is the least multiple of ``m`` above ``q_{m-1}`` (with ``q_0 = 1``)
    such that ``(m-1)!`` divides ``q_m! / q_{m-1}!``.  This gives 2, 4, 6, 12, ...
    """
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    out = []
    prev = 1
    for m in range(1, m_max + 1):
        q = m * (prev // m + 1)
        while (math.factorial(q) // math.factorial(prev)) % math.factorial(m - 1):
            q += m
        if math.factorial(q) > MAX_PLATE:
            raise StageOverflow(m_max, m - 1, f"plate weight {q}! exceeds {MAX_PLATE} cells per loop")
        out.append(q)
        prev = q
    return out


# ---------------------------------------------------------------------------
# witnesses

@dataclass(frozen=True)
class HomWitness:
    """A (P, q) witness for property (P) at one level.

    ``loops`` holds one ``(a, b)`` pair per component: ``a`` inside the first
    left-loop cell, ``b`` inside the first right-loop cell, both returning to
    themselves after ``q!`` steps.
    """

    P: Partition
    q: int
    loops: tuple = ()

    @property
    def weight(self) -> int:
        return math.factorial(self.q)

    def to_json(self) -> dict:
        return {"P": self.P.to_json(), "q": self.q,
                "loops": [{"a": a.to_json(), "b": b.to_json()} for a, b in self.loops]}

    @classmethod
    def from_json(cls, obj) -> "HomWitness":
        loops = tuple((Clopen.from_json(x["a"]), Clopen.from_json(x["b"])) for x in obj.get("loops", ()))
        return cls(Partition.from_json(obj["P"]), int(obj["q"]), loops)


@dataclass(frozen=True)
class ContWitness:
    """A (P, q) witness for property (Q) at one level."""

    P: Partition
    q: int

    @property
    def weight(self) -> int:
        return math.factorial(self.q)

    def to_json(self) -> dict:
        return {"P": self.P.to_json(), "q": self.q}

    @classmethod
    def from_json(cls, obj) -> "ContWitness":
        return cls(Partition.from_json(obj["P"]), int(obj["q"]))


def witnesses_to_json(ws) -> dict:
    kind = "hom" if ws and isinstance(ws[0], HomWitness) else "cont"
    return {"kind": kind, "witnesses": [w.to_json() for w in ws]}


def witnesses_from_json(obj) -> list:
    cls = HomWitness if obj.get("kind", "hom") == "hom" else ContWitness
    return [cls.from_json(w) for w in obj["witnesses"]]


# ---------------------------------------------------------------------------
# helpers

def _component(h: PrefixMap, P: Partition, component):
    if isinstance(component, ComponentKind):
        return component
    return classify_all(build_gr(h, P))[component][1]


def _returns(h: PrefixMap, A: Clopen, n: int) -> bool:
    """Whether ``h^n(A) = A`` (checked by repeated images)."""
    X = A
    for _ in range(n):
        X = image(h, X)
    return X == A


def _local_kind(h: PrefixMap, P: Partition, idxs) -> ComponentKind:
    """Classify the subgraph of ``gr(h, P)`` spanned by the cells ``idxs``.

    Raises if an edge leaves the set, so the result is a full component.
    """
    idxs = list(idxs)
    keep = set(idxs)
    edges = set()
    for i in idxs:
        for j in P.cells_meeting(image(h, P[i])):
            if j not in keep:
                raise ContractViolation(f"cell {i} maps into cell {j} outside the component")
            edges.add((i, j))
    G = Digraph(tuple(sorted(keep)), frozenset(edges), tuple(P[i] for i in sorted(keep)))
    return classify(G)


def _partial(rules) -> PrefixMap:
    return PrefixMap(rules, check=False)


def _pull_back(ginv: PrefixMap, region: Clopen, steps: int) -> list:
    """Rules of ``g^{-steps}`` restricted to ``region`` (``steps >= 1``)."""
    rules = restrict_rules(ginv, region)
    for _ in range(steps - 1):
        rules = list(compose(_partial(rules), ginv).rules)
    return rules


def _cycle8(a: str) -> list:
    """The rotation ``a.xyz -> a.(xyz + 1 mod 8)`` of the eight subcylinders of ``[a]``."""
    return [(a + format(i, "03b"), a + format((i + 1) % 8, "03b")) for i in range(8)]


def _chain_rules(pairs) -> list:
    out = []
    for src, dst in pairs:
        out.extend(clopen_bijection(src, dst))
    return out


# ---------------------------------------------------------------------------
# loops

def designated_loops(h: PrefixMap, P: Partition, kind: ComponentKind) -> tuple:
    """The loop sets ``(a, b)`` that ``attach_loops`` places in a dumbbell.

    ``a`` is the first half-cylinder of ``u_1 & h^-1(u_2)`` and ``b`` the first
    half-cylinder of ``h(w_t)``.
    """
    r = kind.params[0]
    u1 = P[kind.u[0]]
    nxt = P[kind.u[1 % r]]
    G2 = u1 & preimage(h, nxt)
    Iw = image(h, P[kind.w[-1]])
    return Clopen.cylinder(G2.first_word() + "0"), Clopen.cylinder(Iw.first_word() + "0")


def _attach(g: PrefixMap, P: Partition) -> tuple:
    G = build_gr(g, P)
    kinds = [k for _, k in classify_all(G)]
    for k in kinds:
        if k.kind != "dumbbell" or not k.balanced:
            raise ValueError(f"attach_loops needs balanced dumbbells, got {k.describe()}")
    ginv = g.inverse()
    replaced = []
    new_rules: list = []
    loops = []
    for k in kinds:
        r, _, t = k.params
        u1, ur = P[k.u[0]], P[k.u[-1]]
        nxt = P[k.u[1 % r]]
        G2 = u1 & image(ginv, nxt)
        a = Clopen.cylinder(G2.first_word() + "0")
        E = G2 - a
        Es = split_clopen(E, 5)
        C0 = (u1 - G2) | Es[0]
        T = _cycle8(a.first_word())
        T += _chain_rules([(Es[1], C0), (Es[2], Es[1]), (Es[3], Es[2]), (Es[4], Es[3]), (Es[0], Es[4])])
        if r == 1:
            replaced.append(G2)
            new_rules.extend(T)
        else:
            replaced.append(ur)
            new_rules.extend(compose(_partial(_pull_back(ginv, ur, r - 1)), _partial(T)).rules)

        w1, wt = P[k.w[0]], P[k.w[-1]]
        Iv = image(g, P[k.v[-1]])
        Iw = image(g, wt)
        b = Clopen.cylinder(Iw.first_word() + "0")
        Ds = split_clopen(Iw - b, 5)
        C0 = Iv | Ds[0]
        Tw = _cycle8(b.first_word())
        Tw += _chain_rules([(C0, Ds[1]), (Ds[1], Ds[2]), (Ds[2], Ds[3]), (Ds[3], Ds[4]), (Ds[4], Ds[0])])
        replaced.append(wt)
        if t == 1:
            new_rules.extend(Tw)
        else:
            new_rules.extend(compose(_partial(_pull_back(ginv, wt, t - 1)), _partial(Tw)).rules)
        loops.append((a, b))
    keep = union_all(replaced).complement()
    h = PrefixMap(restrict_rules(g, keep) + new_rules)
    if not h.is_homeomorphism():
        raise ContractViolation("attach_loops produced a non-injective map")
    if build_gr(h, P).edges != G.edges:
        raise ContractViolation("attach_loops changed the transition digraph")
    for k, (a, b) in zip(kinds, loops):
        n = k.params[0]
        if not (_returns(h, a, n) and _returns(h, b, n)):
            raise ContractViolation("loop certificate failed after attach_loops")
    return h, kinds, loops


def attach_loops(g: PrefixMap, P: Partition) -> PrefixMap:
    """Redefine ``g`` near the loops so that every dumbbell carries exact loops.

    Parameters
    ----------
    g : PrefixMap
        A homeomorphism whose transition digraph over ``P`` consists of
        balanced dumbbells.
    P : Partition

    Returns
    -------
    PrefixMap
        ``h`` with ``gr(h, P) = gr(g, P)``.  In every dumbbell of plate weight
        ``r`` the sets returned by ``designated_loops`` satisfy
        ``h^r(a) = a`` and ``h^r(b) = b``; ``h`` differs from ``g`` only on
        ``u_r`` and ``w_r``.

    Notes
    -----
    The first-return map to ``u_1 & g^-1(u_2)`` is rebuilt as an 8-cycle of
    subcylinders on ``a`` plus a 5-cycle of pieces feeding the bar, and
    symmetrically on the right.  Periodic points therefore have periods that
    are multiples of ``5r`` or ``8r``.
    """
    return _attach(g, P)[0]


# ---------------------------------------------------------------------------
# checkers for (P)

def _find_loop(h: PrefixMap, cell: Clopen, n: int, extra: int = 3, rounds: int = 8) -> Clopen | None:
    """Bounded search for a nonempty ``A`` inside ``cell`` with ``h^n(A) = A``."""
    seen = set()
    for e in range(extra + 1):
        for w in cell.cyl:
            for i in range(1 << e):
                x = w + format(i, f"0{e}b") if e else w
                if x in seen:
                    continue
                seen.add(x)
                Y = Clopen.cylinder(x)
                for _ in range(rounds):
                    Z = Y
                    for _ in range(n):
                        Z = image(h, Z)
                    if not Z <= cell:
                        break
                    if Z == Y:
                        return Y
                    Y = Y | Z
    return None


def h_regular(h: PrefixMap, P: Partition, loops=None) -> int | None:
    """The common plate weight ``w(h, P)``, or None if ``P`` is not h-regular.

    Every component must be a balanced dumbbell with a left and a right loop.
    Loops are taken from ``loops`` (pairs ``(a, b)``) when given; otherwise
    the designated loops are tried and then a bounded search over small
    cylinders, so a None answer without ``loops`` may be a false negative.
    """
    W = None
    kinds = [k for _, k in classify_all(build_gr(h, P))]
    for k in kinds:
        if not k.balanced:
            return None
        if W is None:
            W = k.params[0]
        elif k.params[0] != W:
            return None
    for k in kinds:
        u1, w1 = P[k.u[0]], P[k.w[0]]
        if loops is not None:
            mine = [(a, b) for a, b in loops if a and a <= u1]
            if not any(b and b <= w1 and _returns(h, a, W) and _returns(h, b, W) for a, b in mine):
                return None
            continue
        try:
            a, b = designated_loops(h, P, k)
            ok = a <= u1 and b <= w1 and _returns(h, a, W) and _returns(h, b, W)
        except (DepthOverflow, IndexError):
            ok = False
        if not ok:
            if _find_loop(h, u1, W) is None or _find_loop(h, w1, W) is None:
                return None
    return W


def check_property_P(h: PrefixMap, w: HomWitness, m: int) -> Verdict:
    """Verify a (P, q) witness for level ``m`` exactly.

    Checks mesh below ``1/m``, ``q`` a multiple of ``m``, every component a
    balanced dumbbell of plate weight ``q!``, and the loop certificates
    ``h^{q!}(a) = a``, ``h^{q!}(b) = b`` by repeated images.
    """
    if m < 1:
        return Verdict.fail("m must be positive")
    mp = mesh(w.P.cells)
    if not mp < Fraction(1, m):
        return Verdict.fail(f"mesh {mp} is not below 1/{m}")
    if w.q < 1 or w.q % m:
        return Verdict.fail(f"q = {w.q} is not a multiple of m = {m}")
    W = w.weight
    kinds = [k for _, k in classify_all(build_gr(h, w.P))]
    for k in kinds:
        if k.kind != "dumbbell":
            return Verdict.fail(f"component is {k.describe()}, not dumbbell", k)
        if not k.balanced or k.params[0] != W:
            return Verdict.fail(f"component is {k.describe()}, not a balanced dumbbell "
                                f"of plate weight {W}", k)
    by_cell = {}
    for a, b in w.loops:
        if not a:
            return Verdict.fail("empty left loop set")
        by_cell.setdefault(w.P.locate_word(a.first_word()), []).append((a, b))
    for k in kinds:
        u1, w1 = w.P[k.u[0]], w.P[k.w[0]]
        cands = [(a, b) for a, b in by_cell.get(k.u[0], []) if a <= u1]
        if not cands:
            return Verdict.fail(f"no left loop recorded in {k.describe()} at cell {k.u[0]}", k)
        a, b = cands[0]
        if not _returns(h, a, W):
            return Verdict.fail(f"left loop does not return after {W} steps", k)
        if not (b and b <= w1):
            return Verdict.fail(f"right loop set is not inside w_1 of {k.describe()}", k)
        if not _returns(h, b, W):
            return Verdict.fail(f"right loop does not return after {W} steps", k)
    return PASS


# ---------------------------------------------------------------------------
# bar increases and subdumbbells

def _increase(h: PrefixMap, P: Partition, k: ComponentKind, side: str) -> tuple:
    if k.kind != "dumbbell":
        raise ValueError(f"increase_bar needs a dumbbell component, got {k.describe()}")
    r, s, t = k.params
    if side == "left":
        i = k.u[0]
        u1 = P[i]
        A = u1 & preimage(h, P[k.u[1 % r]])
        B = u1 & preimage(h, P[k.v[0]])
    elif side == "right":
        i = k.w[0]
        w1 = P[i]
        A = image(h, P[k.v[-1]]) & w1
        B = image(h, P[k.w[-1]]) & w1
    else:
        raise ValueError("side must be 'left' or 'right'")
    if not A or not B or (A | B) != P[i]:
        raise ValueError("the cell does not split along the dumbbell")
    cells = list(P.cells)
    cells[i:i + 1] = [A, B]
    P2 = Partition(cells, check=False)

    def shift(x):
        return x + 1 if x > i else x
    idxs = [shift(x) for x in k.u + k.v + k.w] + [i + 1]
    k2 = _local_kind(h, P2, idxs)
    if k2.kind != "dumbbell" or k2.params != (r, s + 1, t):
        raise ContractViolation(f"bar increase gave {k2.describe()} instead of "
                                f"Dumbbell({r},{s + 1},{t})")
    return P2, k2


def increase_bar(h: PrefixMap, P: Partition, component, side: str) -> Partition:
    """Lengthen the bar of one dumbbell of ``gr(h, P)`` by one cell.

    ``side="left"`` splits ``u_1`` into ``h^-1(u_2)`` and ``h^-1(v_1)``;
    ``side="right"`` splits ``w_1`` into ``h(v_s)`` and ``h(w_t)``.  The
    component (a ``ComponentKind`` or an index into ``classify_all``) becomes
    ``Dumbbell(r, s+1, t)``; other components are untouched.
    """
    return _increase(h, P, _component(h, P, component), side)[0]


def _sub_alignment(Df: ComponentKind, Dc: ComponentKind, nu) -> tuple:
    """``(type, left, right)``: the type and the bar increases aligning the first loop cells."""
    rc, _, tc = Dc.params
    parts = {Dc.index_of(nu[x])[0] for x in Df.u + Df.v + Df.w}
    if "v" in parts:
        typ = 3
    elif parts == {"u"}:
        typ = 1
    elif parts == {"w"}:
        typ = 2
    else:
        raise ContractViolation("subdumbbell meets both loops but not the bar")
    _, iu = Dc.index_of(nu[Df.u[0]])
    _, jw = Dc.index_of(nu[Df.w[0]])
    if typ == 1:
        return typ, (iu - 1) % rc, (1 - jw) % rc
    if typ == 2:
        return typ, (iu - 1) % tc, (1 - jw) % tc
    return typ, (iu - 1) % rc, (1 - jw) % tc


def _bar_offset(Df: ComponentKind, Dc: ComponentKind, nu) -> int:
    """Number of bar cells of ``Df`` before the first one inside ``v_1`` of ``Dc``."""
    return next(i for i, x in enumerate(Df.v) if nu[x] == Dc.v[0])


def sub_type(Df: ComponentKind, Dc: ComponentKind, nu) -> tuple:
    """``(type, normalized)`` of a subdumbbell given the refinement map ``nu``.

    ``normalized`` is true when no bar increase is needed: the first loop
    cells are aligned and, for type 3, the bar is centered.
    """
    typ, L, R = _sub_alignment(Df, Dc, nu)
    ok = L == 0 and R == 0
    if ok and typ == 3:
        r = _bar_offset(Df, Dc, nu)
        ok = r == Df.params[1] - Dc.params[1] - r
    return typ, ok


@dataclass(frozen=True)
class SubdumbbellInfo:
    """Type of a subdumbbell and its normalized form.

    ``P`` and ``D`` are the bar-increased partition and component; ``r`` is
    the number of bar cells before the first one inside ``v_1`` (type 3 only).
    """

    type: int
    P: Partition
    D: ComponentKind
    left_increases: int
    right_increases: int
    r: int | None = None


def subdumbbell_type(h: PrefixMap, P_fine: Partition, P_coarse: Partition,
                     D_fine, D_coarse) -> SubdumbbellInfo:
    """Classify ``D_fine`` inside ``D_coarse`` and normalize it.

    Type 1 lies in the left loop of ``D_coarse``, type 2 in the right loop and
    type 3 meets the bar.  Normalization uses bar increases to reach
    ``u'_1, w'_1`` inside ``u_1`` (type 1), inside ``w_1`` (type 2), or
    ``u'_1`` in ``u_1`` and ``w'_1`` in ``w_1`` with the bar centered so that
    ``r = l' - l - r`` (type 3).
    """
    Df = _component(h, P_fine, D_fine)
    Dc = _component(h, P_coarse, D_coarse)
    if Df.kind != "dumbbell" or Dc.kind != "dumbbell":
        raise ValueError("subdumbbell_type needs dumbbell components")
    nu = refinement_map(P_fine, P_coarse)
    if nu is None:
        raise ValueError("P_fine does not refine P_coarse")
    coarse = set(Dc.u + Dc.v + Dc.w)
    if any(nu[x] not in coarse for x in Df.u + Df.v + Df.w):
        raise ValueError("D_fine is not contained in D_coarse")
    typ, L, R = _sub_alignment(Df, Dc, nu)
    P, D = P_fine, Df
    for _ in range(L):
        P, D = _increase(h, P, D, "left")
    for _ in range(R):
        P, D = _increase(h, P, D, "right")
    nu = refinement_map(P, P_coarse)
    rr = None
    if typ == 3:
        rr = _bar_offset(D, Dc, nu)
        rho = D.params[1] - Dc.params[1] - rr
        extra_l, extra_r = max(0, rho - rr), max(0, rr - rho)
        for _ in range(extra_l):
            P, D = _increase(h, P, D, "left")
        for _ in range(extra_r):
            P, D = _increase(h, P, D, "right")
        L += extra_l
        R += extra_r
        nu = refinement_map(P, P_coarse)
        rr = _bar_offset(D, Dc, nu)
        if rr != D.params[1] - Dc.params[1] - rr:
            raise ContractViolation("type-3 bar is not centered after normalization")
    want = {1: ("u", "u"), 2: ("w", "w"), 3: ("u", "w")}[typ]
    if (Dc.index_of(nu[D.u[0]]), Dc.index_of(nu[D.w[0]])) != ((want[0], 1), (want[1], 1)):
        raise ContractViolation("normalization did not align the first loop cells")
    return SubdumbbellInfo(typ, P, D, L, R, rr)


# ---------------------------------------------------------------------------
# checkers for (Q)

def _proper(A: Clopen, B: Clopen) -> bool:
    return A <= B and A != B


def strict_check(f: PrefixMap, P: Partition, B) -> Verdict:
    """Exact strictness of a balloon of ``gr(f, P)``.

    Requires ``f(v_i)`` properly inside ``v_{i+1}``, ``f(w_j)`` properly inside
    ``w_{j+1}`` and ``f(v_s) | f(w_t)`` properly inside ``w_1``.  A loop
    component is treated as a balloon with an empty bar.
    """
    k = _component(f, P, B)
    if k.kind == "loop":
        v, w = (), k.u
    elif k.kind == "balloon":
        v, w = k.v, k.w
    else:
        raise ValueError(f"strict_check needs a balloon component, got {k.describe()}")
    for x, y in zip(v, v[1:]):
        if not _proper(image(f, P[x]), P[y]):
            return Verdict.fail(f"f(cell {x}) is not a proper subset of cell {y}", k)
    for x, y in zip(w, w[1:]):
        if not _proper(image(f, P[x]), P[y]):
            return Verdict.fail(f"f(cell {x}) is not a proper subset of cell {y}", k)
    into = image(f, P[w[-1]])
    if v:
        into = into | image(f, P[v[-1]])
    if not _proper(into, P[w[0]]):
        return Verdict.fail(f"images into cell {w[0]} cover it", k)
    return PASS


def check_property_Q(f: PrefixMap, w: ContWitness, m: int) -> Verdict:
    """Verify a (P, q) witness for property (Q) at level ``m`` exactly."""
    if m < 1:
        return Verdict.fail("m must be positive")
    mp = mesh(w.P.cells)
    if not mp < Fraction(1, m):
        return Verdict.fail(f"mesh {mp} is not below 1/{m}")
    if w.q < 1 or w.q % m:
        return Verdict.fail(f"q = {w.q} is not a multiple of m = {m}")
    W = w.weight
    for _, k in classify_all(build_gr(f, w.P)):
        if k.kind != "balloon" or k.params != (W, W):
            return Verdict.fail(f"component is {k.describe()}, not Balloon({W},{W})", k)
        v = strict_check(f, w.P, k)
        if not v:
            return v
    return PASS


def f_admissible(f: PrefixMap, P: Partition) -> int | None:
    """The common ``k`` with every component a strict ``Balloon(k, k)``, or None."""
    k0 = None
    for _, k in classify_all(build_gr(f, P)):
        if k.kind != "balloon" or k.params[0] != k.params[1]:
            return None
        if k0 is None:
            k0 = k.params[0]
        elif k.params[0] != k0:
            return None
        if not strict_check(f, P, k):
            return None
    return k0


def subballoon_type(f: PrefixMap, P_fine: Partition, P_coarse: Partition, B_fine, B_coarse) -> int:
    """The vertex of ``B_coarse`` containing the initial vertex of ``B_fine``."""
    Bf = _component(f, P_fine, B_fine)
    Bc = _component(f, P_coarse, B_coarse)
    if Bf.kind != "balloon" or Bc.kind != "balloon":
        raise ValueError("subballoon_type needs balloon components")
    nu = refinement_map(P_fine, P_coarse)
    if nu is None:
        raise ValueError("P_fine does not refine P_coarse")
    coarse = set(Bc.v + Bc.w)
    if any(nu[x] not in coarse for x in Bf.v + Bf.w):
        raise ValueError("B_fine is not contained in B_coarse")
    return nu[Bf.v[0]]


# ---------------------------------------------------------------------------
# generators

def _code_depth(n: int) -> int:
    return max(1, (n - 1).bit_length()) + 1


def _assign_words(rng: random.Random, n1: int, parents: list) -> list:
    """Words for every stage: a random code at stage 1, then random codes inside each parent."""
    code = prefix_code(rng, n1, _code_depth(n1))
    rng.shuffle(code)
    words = [code]
    for par in parents:
        kids: dict = {}
        for child, p in enumerate(par):
            kids.setdefault(p, []).append(child)
        out = [None] * len(par)
        prev = words[-1]
        for p in range(len(prev)):
            ch = kids.get(p, [])
            if len(ch) < 2:
                raise ContractViolation(f"cell {p} has {len(ch)} children; stages must split every cell")
            code = prefix_code(rng, len(ch), _code_depth(len(ch)))
            rng.shuffle(code)
            for c, x in zip(ch, code):
                out[c] = prev[p] + x
        words.append(out)
    return words


def _sub_positions(W: int, l: int, W2: int, typ: int) -> tuple:
    """Bar length and parent-local vertex of every vertex of a subdumbbell.

    Parent-local positions list ``u_1..u_W, v_1..v_l, w_1..w_W``; the child
    vertices are returned in the same order.
    """
    if typ == 3:
        return l, ([k % W for k in range(W2)] + [W + j for j in range(l)]
                   + [W + l + k % W for k in range(W2)])
    l2 = W - 1 if W > 1 else 1
    off = 0 if typ == 1 else W + l
    # u'_k sits at walk position k-1, v'_j at j and w'_k at l2+k
    walk = list(range(W2)) + list(range(1, l2 + 1)) + list(range(l2 + 1, l2 + W2 + 1))
    return l2, [off + p % W for p in walk]


def _dumbbell_edges(base: int, W: int, l: int) -> list:
    u = list(range(base, base + W))
    v = list(range(base + W, base + W + l))
    w = list(range(base + W + l, base + 2 * W + l))
    e = [(u[i], u[(i + 1) % W]) for i in range(W)]
    e += [(w[i], w[(i + 1) % W]) for i in range(W)]
    chain = [u[0]] + v + [w[0]]
    e += list(zip(chain, chain[1:]))
    return e


HOM_CHILDREN = ((1, 2, 3, 3), (3, 3))


def generic_hom(m_max: int, seed: int = 0, k1: int = 2) -> tuple:
    """A homeomorphism with nested property-(P) witnesses for ``m = 1..m_max``.

    Parameters
    ----------
    m_max : int
        Number of levels (at most 3 within the plate budget).
    seed : int
        Seed of the choice stream (cell codes and their assignment).
    k1 : int
        Number of dumbbells at the first level.

    Returns
    -------
    h : PrefixMap
    witnesses : list of HomWitness
        ``witnesses[m-1]`` is the level-``m`` witness; partitions are nested
        and ``q`` follows ``q_schedule``.

    Notes
    -----
    Level 1 consists of ``k1`` copies of ``Dumbbell(q_1!, 1, q_1!)``.  Each
    level-``m`` dumbbell contains subdumbbells of plate weight ``q_{m+1}!``
    (types 1, 2, 3, 3 at the second level, two of type 3 afterwards), already
    in normalized position.  The finest digraph is realized as a
    homeomorphism and loops are attached there; coarse loops are unions of
    ``h``-translates of a fine loop.
    """
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    qs = q_schedule(m_max)
    Ws = [math.factorial(q) for q in qs]
    rng = random.Random(seed)
    # level structure: list of (W, l, base) per level and parent maps
    dumbbells = [[(Ws[0], 1, i * (2 * Ws[0] + 1)) for i in range(k1)]]
    parents: list = []
    for m in range(1, m_max):
        W2 = Ws[m]
        types = HOM_CHILDREN[min(m - 1, len(HOM_CHILDREN) - 1)]
        level, par = [], []
        for W, l, base in dumbbells[-1]:
            for typ in types:
                l2, pos = _sub_positions(W, l, W2, typ)
                level.append((W2, l2, len(par)))
                par.extend(base + p for p in pos)
        dumbbells.append(level)
        parents.append(par)
    n1 = k1 * (2 * Ws[0] + 1)
    words = _assign_words(rng, n1, parents)
    fine = words[-1]
    edges = [e for W, l, base in dumbbells[-1] for e in _dumbbell_edges(base, W, l)]
    labels = tuple(Clopen.cylinder(x) for x in fine)
    G = Digraph(tuple(range(len(fine))), frozenset(edges), labels)
    g, _ = realize(G)
    P = Partition(labels)
    h, _, loops = _attach(g, P)
    fine_loops = {}
    for a, b in loops:
        fine_loops[P.locate_word(a.first_word())] = (a, b)
    witnesses = []
    for m in range(m_max):
        Pm = Partition([Clopen.cylinder(x) for x in words[m]], check=False)
        if m == m_max - 1:
            witnesses.append(HomWitness(Pm, qs[m], tuple(loops)))
            continue
        Wd = Ws[m]
        lv_loops = []
        desc = _descendants(dumbbells, m)
        for di, (W, l, base) in enumerate(dumbbells[m]):
            fi = desc[di]
            Wf, lf, bf = dumbbells[-1][fi]
            a_f, b_f = fine_loops[bf]
            lv_loops.append((_orbit_union(h, a_f, Wf, Wd), _orbit_union(h, b_f, Wf, Wd)))
        witnesses.append(HomWitness(Pm, qs[m], tuple(lv_loops)))
    for m, w in enumerate(witnesses, 1):
        v = check_property_P(h, w, m)
        if not v:
            raise ContractViolation(f"generic_hom level {m}: {v.reason}")
    return h, witnesses


def _descendants(levels: list, m: int) -> dict:
    """Finest type-3 descendant (index) of each level-``m`` dumbbell.

    Relies on the child layout: type-3 children keep ``u'_1`` over ``u_1``
    and ``w'_1`` over ``w_1``; they are found by their parent positions.
    """
    out = {}
    for di in range(len(levels[m])):
        cur = di
        for lv in range(m + 1, len(levels)):
            cur = _first_type3(levels, lv, cur)
        out[di] = cur
    return out


def _first_type3(levels: list, lv: int, parent: int) -> int:
    types = HOM_CHILDREN[min(lv - 1, len(HOM_CHILDREN) - 1)]
    return parent * len(types) + types.index(3)


def _orbit_union(h: PrefixMap, A: Clopen, n_fine: int, n_coarse: int) -> Clopen:
    """``A | h^c(A) | h^2c(A) | ...`` over one fine period (``c = n_coarse``)."""
    parts = [A]
    X = A
    for i in range(1, n_fine):
        X = image(h, X)
        if i % n_coarse == 0:
            parts.append(X)
    return union_all(parts)


def _balloon_positions(W: int, W2: int, p0: int) -> list:
    """Parent vertex (position) of each vertex of a subballoon starting at ``p0``."""
    def c(p):
        return p if p < W else W + (p - W) % W
    return [c(p0 + p) for p in range(2 * W2)]


def _cont_types(W: int, m: int) -> list:
    if m == 1:
        return [0, 0] + list(range(1, 2 * W))
    return [0, 0]


def generic_cont(m_max: int, seed: int = 0, k1: int = 2) -> tuple:
    """A continuous map with nested property-(Q) witnesses for ``m = 1..m_max``.

    Returns ``(f, witnesses)`` with ``witnesses[m-1]`` a ``ContWitness``.
    Level 1 has ``k1`` copies of ``Balloon(q_1!, q_1!)``; the second level
    holds subballoons of every type (two of the initial type) and later levels
    two subballoons of the initial type per balloon.  ``f`` sends each finest
    cell ``[x]`` onto the deep cylinder ``[y0]`` where ``[y]`` is the next
    cell, which makes every balloon strict at every level.
    """
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    qs = q_schedule(m_max)
    Ws = [math.factorial(q) for q in qs]
    rng = random.Random(seed)
    balloons = [[(Ws[0], i * 2 * Ws[0]) for i in range(k1)]]
    parents: list = []
    for m in range(1, m_max):
        W2 = Ws[m]
        level, par = [], []
        for W, base in balloons[-1]:
            for p0 in _cont_types(W, m):
                level.append((W2, len(par)))
                par.extend(base + p for p in _balloon_positions(W, W2, p0))
        balloons.append(level)
        parents.append(par)
    n1 = k1 * 2 * Ws[0]
    words = _assign_words(rng, n1, parents)
    fine = words[-1]
    succ = {}
    for W, base in balloons[-1]:
        for i in range(2 * W - 1):
            succ[base + i] = base + i + 1
        succ[base + 2 * W - 1] = base + W
    f = PrefixMap([(fine[i], fine[succ[i]] + "0") for i in range(len(fine))])
    witnesses = [ContWitness(Partition([Clopen.cylinder(x) for x in words[m]], check=(m == m_max - 1)), qs[m])
                 for m in range(m_max)]
    for m, w in enumerate(witnesses, 1):
        v = check_property_Q(f, w, m)
        if not v:
            raise ContractViolation(f"generic_cont level {m}: {v.reason}")
    return f, witnesses
