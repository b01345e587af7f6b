"""
Transition digraphs ``gr(f, P)`` and their shapes.

A vertex of ``gr(f, P)`` is a cell of ``P`` and ``a -> b`` is an edge iff
``f(a)`` meets ``b``.  Components are weak components; each is classified as a
loop, a balloon, a dumbbell, or something else.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .core import Clopen, Partition, PrefixMap, _image_ivs, refinement_map


@dataclass(frozen=True, eq=True)
class Digraph:
    """A finite digraph.  ``labels[i]`` (optional) is the clopen set of ``vertices[i]``."""

    vertices: tuple
    edges: frozenset
    labels: tuple | None = None

    def __post_init__(self):
        vs = tuple(self.vertices)
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", frozenset(self.edges))
        if len(set(vs)) != len(vs):
            raise ValueError("vertex ids must be unique")
        vset = set(vs)
        for u, v in self.edges:
            if u not in vset or v not in vset:
                raise ValueError(f"edge {(u, v)!r} uses an unknown vertex")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(vs):
                raise ValueError("one label per vertex")

    @cached_property
    def succ(self) -> dict:
        out = {v: [] for v in self.vertices}
        for u, v in self.edges:
            out[u].append(v)
        pos = self.pos
        for v in out:
            out[v].sort(key=pos.__getitem__)
        return out

    @cached_property
    def pred(self) -> dict:
        out = {v: [] for v in self.vertices}
        for u, v in self.edges:
            out[v].append(u)
        pos = self.pos
        for v in out:
            out[v].sort(key=pos.__getitem__)
        return out

    @cached_property
    def pos(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    def label(self, v) -> Clopen:
        if self.labels is None:
            raise ValueError("digraph is unlabeled")
        return self.labels[self.pos[v]]

    def partition(self) -> Partition:
        if self.labels is None:
            raise ValueError("digraph is unlabeled")
        return Partition(self.labels)

    def sorted_edges(self) -> list:
        pos = self.pos
        return sorted(self.edges, key=lambda e: (pos[e[0]], pos[e[1]]))

    def induced(self, vs: Iterable) -> "Digraph":
        keep = set(vs)
        order = [v for v in self.vertices if v in keep]
        labels = None
        if self.labels is not None:
            labels = tuple(self.labels[self.pos[v]] for v in order)
        edges = frozenset((u, v) for u, v in self.edges if u in keep and v in keep)
        return Digraph(tuple(order), edges, labels)

    def relabel(self, mapping: dict) -> "Digraph":
        return Digraph(tuple(mapping[v] for v in self.vertices),
                       frozenset((mapping[u], mapping[v]) for u, v in self.edges),
                       self.labels)

    def same_graph(self, other: "Digraph") -> bool:
        """Equal vertex sets, edges and vertex labels, ignoring vertex order."""
        if set(self.vertices) != set(other.vertices) or self.edges != other.edges:
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is None:
            return True
        return all(self.label(v) == other.label(v) for v in self.vertices)


def build_gr(f: PrefixMap, P: Partition) -> Digraph:
    """``gr(f, P)``: vertex ``i`` per cell, edge ``i -> j`` iff ``f(P[i])`` meets ``P[j]``."""
    los, rows = P.index()
    edges = set()
    for i, c in enumerate(P.cells):
        out: list = []
        for lo, hi in c.intervals:
            _image_ivs(f, lo, hi, out)
        for lo, hi in out:
            k = max(bisect.bisect_right(los, lo) - 1, 0)
            while k < len(rows) and rows[k][0] < hi:
                if rows[k][1] > lo:
                    edges.add((i, rows[k][2]))
                k += 1
    return Digraph(tuple(range(len(P))), frozenset(edges), P.cells)


def ends(G: Digraph) -> tuple:
    """``(left_ends, right_ends)``: vertices without incoming / outgoing edges."""
    left = frozenset(v for v in G.vertices if not G.pred[v])
    right = frozenset(v for v in G.vertices if not G.succ[v])
    return left, right


def _order_key(G: Digraph):
    if G.labels is not None:
        return lambda v: (G.label(v).cyl, G.pos[v])
    return G.pos.__getitem__


def components(G: Digraph) -> list:
    """Weak components with induced edges, ordered by their first vertex."""
    parent = {v: v for v in G.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in G.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict = {}
    for v in G.vertices:
        groups.setdefault(find(v), []).append(v)
    cedges: dict = {r: [] for r in groups}
    for e in G.edges:
        cedges[find(e[0])].append(e)
    pos = G.pos
    comps = []
    for r, vs in groups.items():
        labels = None if G.labels is None else tuple(G.labels[pos[v]] for v in vs)
        comps.append(Digraph(tuple(vs), frozenset(cedges[r]), labels))
    key = _order_key(G)
    comps.sort(key=lambda C: min(key(v) for v in C.vertices))
    return comps


# ---------------------------------------------------------------------------
# shapes

@dataclass(frozen=True)
class ComponentKind:
    """Shape of a component with its witness labeling.

    ``kind`` is one of ``"loop"``, ``"balloon"``, ``"dumbbell"``, ``"other"``.
    ``params`` is ``(n,)`` for a loop, ``(s, t)`` for a balloon and
    ``(r, s, t)`` for a dumbbell.  ``u``, ``v`` and ``w`` are the vertex
    sequences (left loop, bar, right loop).
    """

    kind: str
    params: tuple = ()
    u: tuple = ()
    v: tuple = ()
    w: tuple = ()

    @property
    def balanced(self) -> bool:
        return self.kind == "dumbbell" and self.params[0] == self.params[2]

    @property
    def plate_weight(self):
        return self.params[0] if self.balanced else None

    def describe(self) -> str:
        if self.kind == "other":
            return "Other"
        name = self.kind.capitalize()
        return f"{name}({','.join(map(str, self.params))})"

    def index_of(self, x) -> tuple:
        """``('u'|'v'|'w', i)`` with 1-based ``i`` for vertex ``x``."""
        for part in "uvw":
            seq = getattr(self, part)
            if x in seq:
                return part, seq.index(x) + 1
        raise KeyError(x)


def _is_weakly_connected(C: Digraph) -> bool:
    if not C.vertices:
        return False
    seen = {C.vertices[0]}
    stack = [C.vertices[0]]
    while stack:
        x = stack.pop()
        for y in C.succ[x] + C.pred[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(C.vertices)


def classify(C: Digraph) -> ComponentKind:
    """Exact match against loop, balloon and dumbbell shapes."""
    if not _is_weakly_connected(C):
        raise ValueError("classify expects a single weak component")
    n = len(C.vertices)
    m = len(C.edges)
    indeg = {v: len(C.pred[v]) for v in C.vertices}
    outdeg = {v: len(C.succ[v]) for v in C.vertices}
    other = ComponentKind("other")
    key = _order_key(C)

    if m == n and all(indeg[v] == 1 and outdeg[v] == 1 for v in C.vertices):
        start = min(C.vertices, key=key)
        seq = [start]
        x = C.succ[start][0]
        while x != start:
            seq.append(x)
            x = C.succ[x][0]
        return ComponentKind("loop", (n,), u=tuple(seq))

    if m == n:
        # balloon: one source, one vertex of in-degree 2, all out-degrees 1
        if any(outdeg[v] != 1 for v in C.vertices):
            return other
        srcs = [v for v in C.vertices if indeg[v] == 0]
        joins = [v for v in C.vertices if indeg[v] == 2]
        if len(srcs) != 1 or len(joins) != 1:
            return other
        if any(indeg[v] not in (0, 1, 2) for v in C.vertices):
            return other
        x = srcs[0]
        bar = []
        while x != joins[0]:
            bar.append(x)
            x = C.succ[x][0]
            if len(bar) > n:
                return other
        loop = [x]
        y = C.succ[x][0]
        while y != x:
            loop.append(y)
            y = C.succ[y][0]
            if len(loop) > n:
                return other
        if len(bar) + len(loop) != n or set(bar) & set(loop):
            return other
        return ComponentKind("balloon", (len(bar), len(loop)), v=tuple(bar), w=tuple(loop))

    if m == n + 1:
        outs = [v for v in C.vertices if outdeg[v] == 2]
        ins = [v for v in C.vertices if indeg[v] == 2]
        if len(outs) != 1 or len(ins) != 1:
            return other
        u1, w1 = outs[0], ins[0]
        if u1 == w1:
            return other
        for v in C.vertices:
            if v not in (u1, w1) and (indeg[v] != 1 or outdeg[v] != 1):
                return other
        if indeg[u1] != 1 or outdeg[w1] != 1:
            return other
        uloop = bar = None
        for start in C.succ[u1]:
            seq = []
            x = start
            while x not in (u1, w1) and len(seq) <= n:
                seq.append(x)
                x = C.succ[x][0]
            if x == u1:
                uloop = [u1] + seq
            elif x == w1:
                bar = seq
            else:
                return other
        if uloop is None or bar is None or not bar:
            return other
        wloop = [w1]
        y = C.succ[w1][0]
        while y != w1 and len(wloop) <= n:
            wloop.append(y)
            y = C.succ[y][0]
        if y != w1:
            return other
        if len(uloop) + len(bar) + len(wloop) != n:
            return other
        if len(set(uloop) | set(bar) | set(wloop)) != n:
            return other
        return ComponentKind("dumbbell", (len(uloop), len(bar), len(wloop)),
                             u=tuple(uloop), v=tuple(bar), w=tuple(wloop))
    return other


def classify_all(G: Digraph) -> list:
    """``(component, kind)`` for every component of ``G``."""
    return [(C, classify(C)) for C in components(G)]


def kind_multiset(G: Digraph) -> dict:
    out: dict = {}
    for _, k in classify_all(G):
        key = (k.kind, k.params)
        out[key] = out.get(key, 0) + 1
    return out


# ---------------------------------------------------------------------------
# graph maps

@dataclass(frozen=True)
class GraphMap:
    """A vertex map ``source -> target`` between digraphs."""

    source: Digraph
    target: Digraph
    vertex_map: dict = field(hash=False)

    @property
    def surjective(self) -> bool:
        return set(self.vertex_map.values()) >= set(self.target.vertices)

    def __call__(self, v):
        return self.vertex_map[v]

    def then(self, other: "GraphMap") -> "GraphMap":
        """Composite ``other . self``."""
        return GraphMap(self.source, other.target,
                        {v: other.vertex_map[x] for v, x in self.vertex_map.items()})


def check_graph_map(phi: GraphMap) -> tuple:
    """``(True, None)`` if every source edge maps to a target edge, else ``(False, edge)``."""
    vm = phi.vertex_map
    for v in phi.source.vertices:
        if v not in vm:
            raise ValueError(f"vertex map is not total: {v!r} missing")
    tgt = phi.target.edges
    for e in sorted(phi.source.edges, key=repr):
        if (vm[e[0]], vm[e[1]]) not in tgt:
            return False, e
    return True, None


def refinement_graph_map(f: PrefixMap, P_fine: Partition, P_coarse: Partition,
                         G_fine: Digraph | None = None,
                         G_coarse: Digraph | None = None) -> GraphMap:
    """Containment map ``gr(f, P_fine) -> gr(f, P_coarse)``."""
    nu = refinement_map(P_fine, P_coarse)
    if nu is None:
        raise ValueError("not a refinement")
    G_fine = build_gr(f, P_fine) if G_fine is None else G_fine
    G_coarse = build_gr(f, P_coarse) if G_coarse is None else G_coarse
    return GraphMap(G_fine, G_coarse, dict(enumerate(nu)))


def quotient(G: Digraph, nu: Sequence, n: int) -> Digraph:
    """Image digraph of a vertex map ``nu`` (indices) into ``range(n)``."""
    pos = G.pos
    return Digraph(tuple(range(n)),
                   frozenset((nu[pos[u]], nu[pos[v]]) for u, v in G.edges))


# ---------------------------------------------------------------------------
# DOT

def _dot_id(v) -> str:
    return '"' + str(v).replace('"', "'") + '"'


def to_dot(G: Digraph, name: str = "gr") -> str:
    """DOT text: one cluster per component, carrying its shape as an attribute."""
    lines = [f"digraph {name} {{"]
    key = _order_key(G)
    for k, (C, kind) in enumerate(classify_all(G)):
        lines.append(f"  subgraph cluster_{k} {{")
        lines.append(f'    label="{kind.describe()}";')
        lines.append(f'    kind="{kind.kind}";')
        for v in sorted(C.vertices, key=key):
            if G.labels is not None:
                lab = ",".join(w or "ε" for w in G.label(v).cyl)
                lines.append(f'    {_dot_id(v)} [label="{lab}"];')
            else:
                lines.append(f"    {_dot_id(v)};")
        lines.append("  }")
    pos = {v: key(v) for v in G.vertices}
    for u, v in sorted(G.edges, key=lambda e: (pos[e[0]], pos[e[1]])):
        lines.append(f"  {_dot_id(u)} -> {_dot_id(v)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
