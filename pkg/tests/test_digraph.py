import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cantordyn.core import Partition, Point, apply
from cantordyn.digraph import (Digraph, GraphMap, build_gr, check_graph_map, classify, classify_all,
                               components, ends, kind_multiset, quotient, refinement_graph_map, to_dot)
from cantordyn.sampling import random_map, random_partition

seeds = st.integers(0, 10 ** 6)


def shape(kind: str, params: tuple) -> tuple:
    """Edges of the reference shape on ``0..n-1`` and its ``(u, v, w)`` sequences."""
    if kind == "loop":
        (n,) = params
        return {(i, (i + 1) % n) for i in range(n)}, (tuple(range(n)), (), ())
    if kind == "balloon":
        s, t = params
        v = list(range(s))
        w = list(range(s, s + t))
        edges = {(a, b) for a, b in zip(v, v[1:] + [w[0]])}
        edges |= {(w[i], w[(i + 1) % t]) for i in range(t)}
        return edges, ((), tuple(v), tuple(w))
    r, s, t = params
    u = list(range(r))
    v = list(range(r, r + s))
    w = list(range(r + s, r + s + t))
    edges = {(u[i], u[(i + 1) % r]) for i in range(r)}
    edges |= {(a, b) for a, b in zip([u[0]] + v, v + [w[0]])}
    edges |= {(w[i], w[(i + 1) % t]) for i in range(t)}
    return edges, (tuple(u), tuple(v), tuple(w))


def all_shapes(n: int) -> list:
    out = [("loop", (n,))]
    out += [("balloon", (s, n - s)) for s in range(1, n)]
    out += [("dumbbell", (r, s, n - r - s)) for r in range(1, n) for s in range(1, n - r)]
    return out


def brute_kind(n: int, edges: set) -> tuple:
    """``(kind, params)`` by exhaustive isomorphism search, or ``("other", ())``."""
    for kind, params in all_shapes(n):
        ref, _ = shape(kind, params)
        if len(ref) != len(edges):
            continue
        for perm in itertools.permutations(range(n)):
            if {(perm[a], perm[b]) for a, b in ref} == edges:
                return kind, params
    return "other", ()


@st.composite
def small_components(draw):
    n = draw(st.integers(1, 6))
    kinds = all_shapes(n)
    kind, params = draw(st.sampled_from(kinds))
    edges, _ = shape(kind, params)
    perm = draw(st.permutations(range(n)))
    edges = {(perm[a], perm[b]) for a, b in edges}
    if draw(st.booleans()):
        e = (draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1)))
        edges ^= {e}
    return n, edges


@given(small_components())
def test_classify_matches_isomorphism_search(data):
    n, edges = data
    G = Digraph(tuple(range(n)), frozenset(edges))
    if len(components(G)) != 1:
        with pytest.raises(ValueError):
            classify(G)
        return
    k = classify(G)
    assert (k.kind, k.params) == brute_kind(n, edges)


@given(st.sampled_from([s for n in range(1, 8) for s in all_shapes(n)]), seeds)
def test_classify_sequences(sh, seed):
    kind, params = sh
    edges, (u, v, w) = shape(kind, params)
    n = sum(params)
    perm = list(range(n))
    random.Random(seed).shuffle(perm)
    G = Digraph(tuple(range(n)), frozenset((perm[a], perm[b]) for a, b in edges))
    k = classify(G)
    assert (k.kind, k.params) == (kind, params)
    if kind == "loop":
        assert set(k.u) == {perm[x] for x in u}
        return
    # u_1 is the exit vertex, v the bar in order, w_1 the entry vertex
    assert k.u == tuple(perm[x] for x in u)
    assert k.v == tuple(perm[x] for x in v)
    assert k.w == tuple(perm[x] for x in w)
    part, i = k.index_of(k.v[0])
    assert (part, i) == ("v", 1)


def test_describe_and_balance():
    G = Digraph(range(5), {(0, 1), (1, 0), (1, 2), (2, 3), (3, 4), (4, 3)})
    k = classify(G)
    assert k.describe() == "Dumbbell(2,1,2)"
    assert k.balanced and k.plate_weight == 2
    assert classify(Digraph((0,), {(0, 0)})).describe() == "Loop(1)"


def test_components_and_ends():
    G = Digraph(range(5), {(0, 1), (1, 1), (2, 3), (3, 2), (4, 2)})
    cs = components(G)
    assert [c.vertices for c in cs] == [(0, 1), (2, 3, 4)]
    assert ends(G) == (frozenset({0, 4}), frozenset())
    assert kind_multiset(G) == {("balloon", (1, 1)): 1, ("balloon", (1, 2)): 1}


def brute_gr(f, P: Partition) -> set:
    L = max(f.max_src_len(), 1) + P.max_depth()
    edges = set()
    for w in ("".join(t) for t in itertools.product("01", repeat=L)):
        x = Point(w, "0")
        edges.add((P.locate(x), P.locate(apply(f, x))))
    return edges


@given(seeds)
def test_build_gr_matches_point_probes(seed):
    rng = random.Random(seed)
    f = random_map(rng, 3)
    P = random_partition(rng, rng.randint(1, 6), 3)
    assert set(build_gr(f, P).edges) == brute_gr(f, P)


@given(seeds)
def test_refinement_graph_map_is_graph_map(seed):
    rng = random.Random(seed)
    f = random_map(rng, 3)
    fine = Partition.uniform(3)
    coarse = Partition.uniform(1)
    phi = refinement_graph_map(f, fine, coarse)
    assert check_graph_map(phi) == (True, None)
    assert phi.surjective


def test_check_graph_map_reports_edge():
    G = Digraph((0, 1), {(0, 1), (1, 0)})
    H = Digraph((0, 1), {(0, 0), (1, 1)})
    ok, e = check_graph_map(GraphMap(G, H, {0: 0, 1: 1}))
    assert not ok and e in {(0, 1), (1, 0)}
    ok, _ = check_graph_map(GraphMap(G, H, {0: 0, 1: 0}))
    assert ok


def test_graph_map_then():
    G = Digraph((0, 1), {(0, 1), (1, 0)})
    L = Digraph((0,), {(0, 0)})
    a = GraphMap(G, G, {0: 1, 1: 0})
    b = GraphMap(G, L, {0: 0, 1: 0})
    c = a.then(b)
    assert c.vertex_map == {0: 0, 1: 0} and c.target is L


def test_quotient():
    G = Digraph(range(4), {(0, 1), (1, 2), (2, 3), (3, 0)})
    Q = quotient(G, [0, 1, 0, 1], 2)
    assert set(Q.edges) == {(0, 1), (1, 0)}


def test_to_dot():
    G = Digraph(range(5), {(0, 1), (1, 0), (1, 2), (2, 3), (3, 4), (4, 3)})
    text = to_dot(G)
    assert text.startswith("digraph gr")
    assert "cluster" in text and "Dumbbell(2,1,2)" in text
    assert text.count("->") == 6


def test_classify_all_on_realized_map():
    from cantordyn.approx import realize
    P = Partition.from_words(["000", "001", "01", "10", "11"])
    G = Digraph(range(5), {(0, 1), (1, 0), (1, 2), (2, 3), (3, 4), (4, 3)}, P.cells)
    f, _ = realize(G)
    [(C, k)] = classify_all(build_gr(f, P))
    assert k.describe() == "Dumbbell(2,1,2)"
