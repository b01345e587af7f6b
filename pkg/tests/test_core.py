import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cantordyn.core import (Clopen, DepthOverflow, Partition, Point, PrefixMap, apply, capped_depth,
                            clopen_bijection, compose, diam, dist, fixed_points, image, iterate, mesh,
                            min_gap, preimage, refinement_map, sim_p, sup_dist)
from cantordyn.sampling import random_homeomorphism, random_map, random_partition, random_point

D = 5
WORDS = ["".join(w) for w in itertools.product("01", repeat=D)]


def words_of(A: Clopen, d: int = D) -> set:
    """Brute force: the depth-``d`` words whose cylinders lie in ``A``."""
    return {w for w in ("".join(t) for t in itertools.product("01", repeat=d)) if A.contains_word(w)}


def long_prefix(x: Point, n: int = 64) -> str:
    return x.prefix(n)


def brute_dist(x: Point, y: Point, n: int = 64) -> Fraction:
    a, b = long_prefix(x, n), long_prefix(y, n)
    for i, (p, q) in enumerate(zip(a, b)):
        if p != q:
            return Fraction(1, i + 1)
    return Fraction(0)


def probe_points(L: int) -> list:
    return [Point(w, t) for w in ("".join(t) for t in itertools.product("01", repeat=L)) for t in "01"]


def brute_sup(f: PrefixMap, g: PrefixMap) -> Fraction:
    L = max(f.max_src_len(), g.max_src_len()) + 1
    return max(brute_dist(apply(f, x), apply(g, x)) for x in probe_points(L))


word_sets = st.sets(st.sampled_from(WORDS))
clopens = word_sets.map(Clopen)
points = st.builds(Point, st.text("01", max_size=8), st.text("01", min_size=1, max_size=5))
seeds = st.integers(0, 10 ** 6)


# ---------------------------------------------------------------------------
# clopen sets

@given(word_sets, word_sets)
def test_set_algebra_matches_word_sets(a, b):
    A, B = Clopen(a), Clopen(b)
    assert words_of(A | B) == a | b
    assert words_of(A & B) == a & b
    assert words_of(A - B) == a - b
    assert words_of(A.complement()) == set(WORDS) - a
    assert (A <= B) == (a <= b)
    assert A.isdisjoint(B) == (not (a & b))


@given(word_sets)
def test_canonical_form(a):
    A = Clopen(a)
    assert Clopen(A.cyl) == A
    assert bool(A) == bool(a)
    assert A.is_whole() == (len(a) == 2 ** D)
    # canonical words form an antichain, so no merge is possible
    for u, v in itertools.combinations(A.cyl, 2):
        assert not u.startswith(v) and not v.startswith(u)


def test_merge_siblings():
    assert Clopen(["00", "01"]) == Clopen(["0"])
    assert Clopen(["0", "1"]).is_whole()
    assert Clopen.cylinder("0").complement() == Clopen.cylinder("1")


@given(word_sets.filter(bool))
def test_diam_matches_pairwise(a):
    A = Clopen(a)
    pts = [Point(w, t) for w in a for t in "01"]
    assert diam(A) == max(brute_dist(x, y) for x in pts for y in pts)


def test_diam_values():
    assert diam(Clopen.whole()) == 1
    assert diam(Clopen.cylinder("01")) == Fraction(1, 3)
    assert diam(Clopen(["00", "01"])) == Fraction(1, 2)
    assert mesh(Partition.uniform(3).cells) == Fraction(1, 4)


def test_split():
    A = Clopen(["0", "10"])
    parts = A.split(3)
    assert len(parts) == 6 and all(p.depth() == 3 for p in parts)
    assert Clopen(w for p in parts for w in p.cyl) == A
    assert all(p.isdisjoint(q) for p, q in itertools.combinations(parts, 2))


# ---------------------------------------------------------------------------
# points and the metric

@given(points, points)
def test_dist_matches_prefix_comparison(x, y):
    assert dist(x, y) == brute_dist(x, y, 128)
    assert dist(x, y) == dist(y, x)
    assert (dist(x, y) == 0) == (x == y)


@given(points, points, points)
def test_ultrametric(x, y, z):
    assert dist(x, z) <= max(dist(x, y), dist(y, z))


@given(st.text("01", max_size=6), st.text("01", min_size=1, max_size=4))
def test_point_canonical(pre, per):
    x = Point(pre, per)
    assert Point(pre + per, per) == x
    assert Point(pre + per[0], per[1:] + per[0]) == x
    assert long_prefix(x) == (pre + per * 64)[:64]
    assert long_prefix(Point(pre, per * 2)) == long_prefix(x)
    assert Point(pre, per * 2) == x


def test_point_basics():
    x = Point("1", "01")
    assert x.prefix(6) == "101010"
    assert x == Point("", "10")
    assert x.drop(1) == Point("", "01")
    assert x.prepend("0").prefix(3) == "010"
    assert dist(Point("", "0"), Point("1", "0")) == 1
    assert dist(Point("00", "0"), Point("01", "0")) == Fraction(1, 2)


# ---------------------------------------------------------------------------
# partitions

@given(seeds, st.integers(1, 8))
def test_random_partition_is_partition(seed, n):
    P = random_partition(random.Random(seed), n, 4)
    assert len(P) == n
    cover = [words_of(c) for c in P.cells]
    assert set().union(*cover) == set(WORDS)
    assert sum(map(len, cover)) == 2 ** D


@given(seeds, points)
def test_locate(seed, x):
    P = random_partition(random.Random(seed), 5, 4)
    i = P.locate(x)
    assert P[i].contains_point(x)
    assert all(not P[j].contains_point(x) for j in range(len(P)) if j != i)


def test_partition_rejects_overlap():
    with pytest.raises(ValueError):
        Partition([Clopen.cylinder("0"), Clopen(["00", "1"])])
    with pytest.raises(ValueError):
        Partition([Clopen.cylinder("0")])


@given(seeds)
def test_refinement_map(seed):
    rng = random.Random(seed)
    Q = random_partition(rng, 3, 3)
    fine = Partition([c & q for q in Q.cells for c in Partition.uniform(3).cells if c & q])
    nu = refinement_map(fine, Q)
    assert nu is not None and fine.refines(Q)
    assert all(fine[i] <= Q[j] for i, j in enumerate(nu))
    assert refinement_map(Partition.uniform(1), Partition.uniform(2)) is None


def test_min_gap():
    assert min_gap(Partition.uniform(2)) == Fraction(1, 2)
    assert min_gap(Partition.from_words(["0", "10", "11"])) == Fraction(1, 2)
    assert min_gap(Partition.from_words(["0", "1"])) == 1


def test_partition_json_roundtrip():
    P = random_partition(random.Random(3), 4, 4)
    assert Partition.from_json(P.to_json()) == P


# ---------------------------------------------------------------------------
# prefix maps

def test_rules_must_be_complete():
    with pytest.raises(ValueError):
        PrefixMap([("0", "1")])


@given(seeds, points)
def test_compose_applies_f_first(seed, x):
    rng = random.Random(seed)
    f, g = random_map(rng, 3), random_map(rng, 3)
    assert apply(compose(f, g), x) == apply(g, apply(f, x))
    assert apply(iterate(f, 3), x) == apply(f, apply(f, apply(f, x)))
    assert iterate(f, 0) == PrefixMap.identity()


@given(seeds, points)
def test_inverse(seed, x):
    h = random_homeomorphism(random.Random(seed), 4)
    assert h.is_homeomorphism()
    hinv = h.inverse()
    assert apply(hinv, apply(h, x)) == x
    assert apply(h, apply(hinv, x)) == x


@given(seeds, word_sets)
def test_image_and_preimage_by_points(seed, a):
    f = random_map(random.Random(seed), 3)
    A = Clopen(a)
    pre = preimage(f, A)
    img = image(f, A)
    for x in probe_points(D):
        assert pre.contains_point(x) == A.contains_point(apply(f, x))
        if A.contains_point(x):
            assert img.contains_point(apply(f, x))


@given(seeds)
def test_image_is_tight(seed):
    # every canonical word of f(A) is hit by some point of A
    f = random_map(random.Random(seed), 3)
    A = Clopen.cylinder("0")
    img = image(f, A)
    assert preimage(f, img) >= A
    assert image(f, Clopen.whole()) >= img


@given(seeds)
def test_sup_dist_matches_brute_force(seed):
    rng = random.Random(seed)
    f, g = random_map(rng, 3), random_map(rng, 3)
    assert sup_dist(f, g) == brute_sup(f, g)
    assert sup_dist(f, f) == 0


def test_sup_dist_examples():
    swap = PrefixMap([("0", "1"), ("1", "0")])
    assert sup_dist(swap, PrefixMap.identity()) == 1
    shift = PrefixMap([("0", ""), ("1", "")])
    assert sup_dist(shift, PrefixMap.identity()) == 1


@given(seeds)
def test_sim_p(seed):
    rng = random.Random(seed)
    f, g = random_map(rng, 3), random_map(rng, 3)
    P = random_partition(rng, 3, 3)
    brute = all(P.locate(apply(f, x)) == P.locate(apply(g, x)) for x in probe_points(D))
    assert sim_p(f, g, P) == brute


@given(word_sets.filter(bool), word_sets.filter(bool))
def test_clopen_bijection(a, b):
    A, B = Clopen(a), Clopen(b)
    rules = clopen_bijection(A, B)
    srcs = Clopen(s for s, _ in rules)
    dsts = Clopen(d for _, d in rules)
    assert srcs == A and dsts == B
    assert len({d for _, d in rules}) == len(rules)


def test_fixed_points():
    swap = PrefixMap([("0", "1"), ("1", "0")])
    assert fixed_points(swap) == []
    ident = fixed_points(PrefixMap.identity())
    assert ident and all(p == "cylinder" for _, p in ident)
    shift_in = PrefixMap([("0", "00"), ("1", "1")])
    pts = [p for _, p in fixed_points(shift_in)]
    assert Point("", "0") in pts


@given(seeds)
def test_fixed_points_are_fixed(seed):
    f = random_map(random.Random(seed), 3)
    for _, p in fixed_points(f):
        if p != "cylinder":
            assert apply(f, p) == p


@given(seeds)
def test_map_json_roundtrip(seed):
    f = random_map(random.Random(seed), 3)
    assert PrefixMap.from_json(f.to_json()) == f


def test_depth_cap():
    with capped_depth(4):
        with pytest.raises(DepthOverflow):
            Clopen.cylinder("00000")
    Clopen.cylinder("00000")


@given(seeds)
def test_random_point_roundtrip(seed):
    x = random_point(random.Random(seed))
    assert Point.from_json(x.to_json()) == x
