"""
Realization and approximation.

``realize`` turns a partition-labeled digraph without right ends into a prefix
map whose transition digraph is exactly that digraph.  ``cover_params`` and
``shapes_onto`` produce a disjoint union of balloons or dumbbells mapping onto
a given digraph, and ``approximate`` chains everything together: it finds a
uniform partition fine enough for the target accuracy and returns a map whose
transition digraph consists of exactly ``k`` copies of the requested shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (Clopen, DepthOverflow, depth_cap, Partition, PrefixMap, _check_len, clopen_bijection,
                   word_interval,
                   diam, image, mesh, sup_dist)
from .digraph import Digraph, GraphMap, build_gr, check_graph_map, classify_all, ends


class ContractViolation(AssertionError):
    """An internal postcondition failed; this indicates a bug."""


class ParameterError(ValueError):
    """Illegal shape parameters; the message names the minimal legal values."""


# ---------------------------------------------------------------------------
# splitting cells

def split_clopen(A: Clopen, d: int) -> list:
    """Split ``A`` into ``d`` nonempty clopen pieces.

    Every canonical word is extended by the least number of bits giving at
    least ``d`` subcylinders; the lexicographically sorted leaves are then
    grouped into ``d`` contiguous runs.
    """
    if d < 1:
        raise ValueError("need at least one piece")
    if d == 1:
        return [A]
    words = A.cyl
    k = 0
    while len(words) << k < d:
        k += 1
    _check_len(A.depth() + k)
    # leaves of word j are (lo_j + t * step_j) for t < 2**k, in sorted order
    runs = []
    for w in words:
        lo, hi = word_interval(w)
        runs.append((lo, (hi - lo) >> k))
    per = 1 << k
    q, r = divmod(len(runs) * per, d)
    out = []
    pos = 0
    for i in range(d):
        size = q + (1 if i < r else 0)
        ivs = []
        end = pos + size
        while pos < end:
            j, t = divmod(pos, per)
            take = min(end - pos, per - t)
            lo, step = runs[j]
            ivs.append((lo + t * step, lo + (t + take) * step))
            pos += take
        out.append(Clopen._from_ivs(ivs))
    return out


def realize(G: Digraph) -> tuple:
    """A map ``f`` with ``gr(f, P) = G`` where ``P`` is the labeling of ``G``.

    Returns ``(f, X)``; ``X`` is the union of the left-end cells, and ``f`` is
    a homeomorphism of the space onto its complement.
    """
    if G.labels is None:
        raise ValueError("realize needs partition-labeled vertices")
    left, right = ends(G)
    if right:
        raise ValueError("right end present")
    labels = G.labels
    pos = G.pos
    out_pieces = {}
    in_pieces = {}
    for v in G.vertices:
        cell = labels[pos[v]]
        outs = G.succ[v]
        if len(outs) == 1:
            out_pieces[(v, outs[0])] = cell
        else:
            for t, piece in zip(outs, split_clopen(cell, len(outs))):
                out_pieces[(v, t)] = piece
        ins = G.pred[v]
        if len(ins) == 1:
            in_pieces[(ins[0], v)] = cell
        elif ins:
            for t, piece in zip(ins, split_clopen(cell, len(ins))):
                in_pieces[(t, v)] = piece
    rules = []
    for e in G.sorted_edges():
        rules.extend(clopen_bijection(out_pieces[e], in_pieces[e]))
    f = PrefixMap(rules, check="complete")
    X = Clopen._from_ivs([iv for v in left for iv in G.label(v).intervals])
    return f, X


# ---------------------------------------------------------------------------
# covering parameters

@dataclass(frozen=True)
class CoverParams:
    K: int
    S: int
    M: int
    N: int = 1

    def to_json(self) -> dict:
        return {"K": self.K, "S": self.S, "M": self.M, "N": self.N}


@dataclass(frozen=True)
class EdgeParams:
    """Pseudo-shape data for one edge.

    ``path`` runs from the start of the shape to ``cycle[0]`` (inclusive);
    for dumbbells ``left`` is the left pseudo-loop starting at ``path[0]``.
    """

    S: int
    M: int
    N: int | None
    path: tuple
    cycle: tuple
    left: tuple = ()

    def witness(self) -> dict:
        return {"S": self.S, "M": self.M, "N": self.N, "path": list(self.path),
                "cycle": list(self.cycle), "left": list(self.left)}


class _Anchors:
    """Deterministic choice of a pseudo-loop reachable from every vertex.

    Vertices are processed in order; each walk stops as soon as it can close a
    loop, either on itself or by reaching a vertex already routed to a loop.
    Among closing options the shortest loop wins, preferring lengths that
    divide the running lcm so that the covering parameters stay small.
    """

    def __init__(self, G: Digraph, reverse: bool = False):
        nbr = G.pred if reverse else G.succ
        pos = G.pos
        self.cycle_of: dict = {}   # vertex -> cycle tuple starting at that vertex's anchor
        self.nxt: dict = {}        # vertex -> next vertex on the route to an anchor
        self.reverse = reverse
        cycles: dict = {}          # vertex on a cycle -> (cycle id)
        cyc_list: list = []
        L = 1

        def loop_len(z):
            while z not in cycles:
                z = self.nxt[z]
            return len(cyc_list[cycles[z]])

        def route_len(z):
            n = 0
            while z not in cycles:
                z = self.nxt[z]
                n += 1
            return n

        for x in G.vertices:
            if x in cycles or x in self.nxt:
                continue
            path = [x]
            onpath = {x: 0}
            while True:
                y = path[-1]
                best = None
                for z in nbr[y]:
                    if z in onpath:
                        ln, rank, extra = len(path) - onpath[z], 0, 0
                    elif z in cycles or z in self.nxt:
                        ln, rank, extra = loop_len(z), 1, route_len(z)
                    else:
                        continue
                    key = (0 if L % ln == 0 else 1, ln, rank, extra, pos[z])
                    if best is None or key < best[0]:
                        best = (key, z, rank)
                if best is None:
                    z = min((z for z in nbr[y] if z not in onpath), key=pos.__getitem__,
                            default=None)
                    if z is None:
                        raise ValueError("digraph has an end in the walk direction")
                    onpath[z] = len(path)
                    path.append(z)
                    continue
                _, z, rank = best
                if rank == 0:
                    i = onpath[z]
                    cyc = tuple(path[i:])
                    if reverse:
                        cyc = (cyc[0],) + tuple(reversed(cyc[1:]))
                    cid = len(cyc_list)
                    cyc_list.append(cyc)
                    for v in cyc:
                        cycles[v] = cid
                    L = math.lcm(L, len(cyc))
                    for a, b in zip(path[:i], path[1:i + 1]):
                        self.nxt[a] = b
                else:
                    for a, b in zip(path, path[1:] + [z]):
                        self.nxt[a] = b
                break
        self._cycles = cycles
        self._cyc_list = cyc_list

    def route(self, x) -> tuple:
        """Vertices from ``x`` to its anchor (inclusive), and the anchor's cycle."""
        seq = [x]
        while seq[-1] not in self._cycles:
            seq.append(self.nxt[seq[-1]])
        c = seq[-1]
        cyc = self._cyc_list[self._cycles[c]]
        i = cyc.index(c)
        return tuple(seq), cyc[i:] + cyc[:i]


def _anchors(G: Digraph, reverse: bool) -> _Anchors:
    cache = G.__dict__.setdefault("_anchor_cache", {})
    if reverse not in cache:
        cache[reverse] = _Anchors(G, reverse)
    return cache[reverse]


def _check_kind(kind: str) -> None:
    if kind not in ("balloon", "dumbbell"):
        raise ValueError("kind must be 'balloon' or 'dumbbell'")


def edge_params(G: Digraph, e: tuple, kind: str = "balloon") -> EdgeParams:
    """Pseudo-balloon (or pseudo-dumbbell) through the edge ``e``."""
    _check_kind(kind)
    if e not in G.edges:
        raise ValueError(f"{e!r} is not an edge")
    left_ends, right_ends = ends(G)
    if right_ends:
        raise ValueError("digraph has right ends")
    if kind == "dumbbell" and left_ends:
        raise ValueError("digraph has left ends")
    u, v = e
    fwd, cyc = _anchors(G, False).route(v)
    if kind == "balloon":
        path = (u,) + fwd
        return EdgeParams(S=len(path) - 1, M=len(cyc), N=None, path=path, cycle=cyc)
    back, lcyc_rev = _anchors(G, True).route(u)
    # the backward route is walked against the edges; flip it to edge order
    path = tuple(reversed(back)) + fwd
    c = lcyc_rev[0]
    # lcyc_rev lists the cycle in edge order starting from its anchor already
    lcyc = lcyc_rev
    assert lcyc[0] == c
    s = max(1, len(path) - 2)
    return EdgeParams(S=s, M=len(cyc), N=len(lcyc), path=path, cycle=cyc, left=lcyc)


def cover_params(G: Digraph, kind: str = "balloon") -> CoverParams:
    _check_kind(kind)
    edges = G.sorted_edges()
    if not edges:
        raise ValueError("digraph has no edges")
    S, M, N = 1, 1, 1
    for e in edges:
        p = edge_params(G, e, kind)
        S = max(S, p.S)
        M = math.lcm(M, p.M)
        if p.N is not None:
            N = math.lcm(N, p.N)
    return CoverParams(K=len(edges), S=S, M=M, N=N)


def _legal(params: CoverParams, kind, k, s, m, n) -> None:
    problems = []
    if k < params.K:
        problems.append(f"k={k} < K={params.K}")
    if s < params.S:
        problems.append(f"s={s} < S={params.S}")
    if m < 1 or m % params.M:
        problems.append(f"m={m} is not a multiple of M={params.M}")
    if kind == "dumbbell" and (n is None or n < 1 or n % params.N):
        problems.append(f"n={n} is not a multiple of N={params.N}")
    if problems:
        raise ParameterError("illegal shape parameters: " + "; ".join(problems)
                             + f" (minimal legal: k={params.K}, s={params.S}, m={params.M}"
                             + (f", n={params.N})" if kind == "dumbbell" else ")"))


def shapes_onto(G: Digraph, kind: str, k: int, s: int, m: int, n: int | None = None,
                params: CoverParams | None = None) -> tuple:
    """``k`` disjoint balloons of type ``(s, m)`` or dumbbells of type ``(n, s, m)`` onto ``G``.

    Returns ``(H, phi)``.  Vertex ids of ``H`` are ``(i, part, j)`` with ``part``
    one of ``'u'``, ``'v'``, ``'w'`` and 1-based ``j``.
    """
    _check_kind(kind)
    params = cover_params(G, kind) if params is None else params
    _legal(params, kind, k, s, m, n)
    edges = G.sorted_edges()
    verts: list = []
    hedges: set = set()
    vm: dict = {}
    for i in range(k):
        e = edges[i] if i < len(edges) else edges[0]
        p = edge_params(G, e, kind)
        cyc = p.cycle
        head = p.path[:-1]  # the path without its final vertex (= cyc[0])

        def walk(j, head=head, cyc=cyc):
            return head[j] if j < len(head) else cyc[(j - len(head)) % len(cyc)]

        if kind == "balloon":
            bar = [(i, "v", j) for j in range(1, s + 1)]
            loop = [(i, "w", j) for j in range(1, m + 1)]
            for j, x in enumerate(bar):
                vm[x] = walk(j)
            for j, x in enumerate(loop):
                vm[x] = walk(s + j)
            seq = bar + loop
            verts.extend(seq)
            hedges.update(zip(seq, seq[1:]))
            hedges.add((loop[-1], loop[0]))
        else:
            left = p.left
            uloop = [(i, "u", j) for j in range(1, n + 1)]
            bar = [(i, "v", j) for j in range(1, s + 1)]
            loop = [(i, "w", j) for j in range(1, m + 1)]
            for j, x in enumerate(uloop):
                vm[x] = left[j % len(left)]
            for j, x in enumerate(bar):
                vm[x] = walk(j + 1)
            for j, x in enumerate(loop):
                vm[x] = walk(s + 1 + j)
            verts.extend(uloop + bar + loop)
            hedges.update(zip(uloop, uloop[1:]))
            hedges.add((uloop[-1], uloop[0]))
            seq = [uloop[0]] + bar + loop
            hedges.update(zip(seq, seq[1:]))
            hedges.add((loop[-1], loop[0]))
    H = Digraph(tuple(verts), frozenset(hedges))
    phi = GraphMap(H, G, vm)
    ok, bad = check_graph_map(phi)
    if not ok or not phi.surjective:
        raise ContractViolation(f"shape map is not a surjective graph map (edge {bad!r})")
    return H, phi


# ---------------------------------------------------------------------------
# lifting and approximation

def refine_realize(f: PrefixMap, Q: Partition, G: Digraph, phi: GraphMap,
                   GQ: Digraph | None = None) -> tuple:
    """Lift a surjective graph map ``phi: G -> gr(f, Q)`` to a refinement and a map.

    Returns ``(P, psi, g)``: ``P`` refines ``Q`` with one cell per vertex of
    ``G`` (``psi[i]`` is the vertex of cell ``i``), and ``g`` realizes ``G``
    on ``P``.
    """
    GQ = build_gr(f, Q) if GQ is None else GQ
    if not phi.surjective or set(phi.vertex_map.values()) - set(GQ.vertices):
        raise ValueError("phi must be surjective onto gr(f, Q)")
    groups: dict = {a: [] for a in GQ.vertices}
    for x in G.vertices:
        groups[phi(x)].append(x)
    label = {}
    for a in GQ.vertices:
        for x, piece in zip(groups[a], split_clopen(Q.cells[a], len(groups[a]))):
            label[x] = piece
    labels = tuple(label[x] for x in G.vertices)
    P = Partition(labels, check=False)
    GP = Digraph(tuple(range(len(G.vertices))),
                 frozenset((G.pos[a], G.pos[b]) for a, b in G.edges), labels)
    g, _ = realize(GP)
    psi = dict(enumerate(G.vertices))
    return P, psi, g


def image_mesh(f: PrefixMap, Q: Partition) -> Fraction:
    return mesh(image(f, c) for c in Q.cells)


def _least_depth(eps: Fraction) -> int:
    d = 0
    while Fraction(1, d + 1) >= eps:
        d += 1
    return d


def choose_depth(f: PrefixMap, eps: Fraction, max_depth: int | None = None) -> tuple:
    """Least uniform depth ``d`` with ``mesh(B_d)`` and ``mesh(f(B_d))`` below ``eps``.

    In an ultrametric the distance between ``f(x)`` and a nearby image point
    is bounded by the larger of the two meshes, so both are compared with
    ``eps`` itself.
    """
    top = depth_cap() if max_depth is None else max_depth
    d = _least_depth(Fraction(eps))
    while True:
        if d > top:
            raise DepthOverflow(d, top, "uniform partition depth")
        Q = Partition.uniform(d)
        fm = image_mesh(f, Q)
        if fm < eps:
            return d, Q, fm
        d += 1


def join_partition(f: PrefixMap, d: int) -> Partition:
    """The common refinement of ``B_d`` and ``f^{-1}(B_d)``.

    Its cells are the nonempty sets ``[x] & f^{-1}[y]`` with ``|x| = |y| = d``.
    Any partition whose cells and cell images all have diameter at most
    ``1/(d+1)`` refines it, so it is the coarsest such partition.
    """
    groups: dict = {}
    for s, t in f.rules:
        L = max(len(s), d, d + len(s) - len(t))
        _check_len(L)
        k = L - len(s)
        for i in range(1 << k):
            x = s + format(i, f"0{k}b") if k else s
            y = t + x[len(s):]
            groups.setdefault((x[:d], y[:d]), []).append(x)
    cells = [Clopen(ws) for ws in groups.values()]
    cells.sort(key=Clopen.sort_key)
    return Partition(cells)


def choose_partition(f: PrefixMap, eps) -> tuple:
    """``(d, Q, mesh(f(Q)))`` with ``Q`` the coarsest partition meeting both mesh bounds."""
    d = _least_depth(Fraction(eps))
    Q = join_partition(f, d)
    return d, Q, image_mesh(f, Q)


def approximate(f: PrefixMap, eps, kind: str = "dumbbell", k: int | None = None,
                s: int | None = None, m: int | None = None, n: int | None = None,
                partition: str = "join", check: bool = True) -> tuple:
    """Approximate ``f`` by a map whose digraph is ``k`` copies of one shape.

    Parameters
    ----------
    f : PrefixMap
        The map; must be a homeomorphism for ``kind="dumbbell"``.
    eps : rational
        Target accuracy, positive.
    kind : {"dumbbell", "balloon"}
    k, s, m, n : int, optional
        Shape overrides; must be legal for the covering parameters.
    partition : {"join", "uniform"}
        How the coarse partition ``Q`` is chosen.  ``"join"`` takes the
        coarsest partition with ``mesh(Q)`` and ``mesh(f(Q))`` below ``eps``;
        ``"uniform"`` takes the least uniform depth.
    check : bool
        Verify the accuracy and shape postconditions before returning.

    Returns
    -------
    g : PrefixMap
    P : Partition
    report : dict
        Depth, meshes, covering parameters, the chosen ``(k, n, s, m)`` and,
        when checked, ``sup_dist`` and ``mesh_P``.
    """
    _check_kind(kind)
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if kind == "dumbbell" and not f.is_homeomorphism():
        raise ValueError("dumbbell approximation needs a homeomorphism")
    if partition == "join":
        d, Q, fm = choose_partition(f, eps)
    elif partition == "uniform":
        d, Q, fm = choose_depth(f, eps)
    else:
        raise ValueError("partition must be 'join' or 'uniform'")
    GQ = build_gr(f, Q)
    params = cover_params(GQ, kind)
    k = params.K if k is None else k
    s = params.S if s is None else s
    m = params.M if m is None else m
    if kind == "dumbbell":
        n = params.N if n is None else n
    H, phi = shapes_onto(GQ, kind, k, s, m, n, params=params)
    P, psi, g = refine_realize(f, Q, H, phi, GQ=GQ)
    mq = mesh(Q.cells)
    bound = mq + fm
    report = {
        "depth": d, "partition": partition, "cells_Q": len(Q), "mesh_Q": mq, "mesh_fQ": fm,
        "cover": params, "k": k, "s": s, "m": m, "n": n if kind == "dumbbell" else None,
        "kind": kind, "lift_bound": bound,
    }
    if not check:
        return g, P, report
    sd = sup_dist(f, g)
    mp = mesh(P.cells)
    report["sup_dist"] = sd
    report["mesh_P"] = mp
    if sd > bound:
        raise ContractViolation("lift bound mesh(Q) + mesh(f(Q)) violated")
    if not (sd < eps and mp < eps):
        raise ContractViolation("approximation accuracy not reached")
    want = ("balloon", (s, m)) if kind == "balloon" else ("dumbbell", (n, s, m))
    kinds = [(kd.kind, kd.params) for _, kd in classify_all(build_gr(g, P))]
    if len(kinds) != k or any(x != want for x in kinds):
        raise ContractViolation("approximating digraph has the wrong shape")
    return g, P, report
