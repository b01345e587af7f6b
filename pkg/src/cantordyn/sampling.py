"""Seeded random generators for test fixtures, demos and the command line."""
from __future__ import annotations

import random
from typing import Sequence

from .core import Clopen, Partition, Point, PrefixMap
from .digraph import Digraph


def prefix_code(rng: random.Random, n: int, max_depth: int) -> list:
    """A random complete prefix code with exactly ``n`` words of length at most ``max_depth``."""
    if not 1 <= n <= 1 << max_depth:
        raise ValueError("impossible prefix code size")
    words = [""]
    while len(words) < n:
        splittable = [i for i, w in enumerate(words) if len(w) < max_depth]
        i = rng.choice(splittable)
        w = words.pop(i)
        words.extend([w + "0", w + "1"])
    return sorted(words)


def random_homeomorphism(rng: random.Random, max_depth: int = 5, max_rules: int | None = None) -> PrefixMap:
    cap = 1 << max_depth if max_rules is None else max_rules
    n = rng.randint(1, cap)
    src = prefix_code(rng, n, max_depth)
    dst = prefix_code(rng, n, max_depth)
    rng.shuffle(dst)
    return PrefixMap(list(zip(src, dst)))


def random_map(rng: random.Random, max_depth: int = 5, max_rules: int | None = None) -> PrefixMap:
    """A random continuous prefix map (destinations arbitrary words)."""
    cap = 1 << max_depth if max_rules is None else max_rules
    n = rng.randint(1, cap)
    src = prefix_code(rng, n, max_depth)
    rules = []
    for s in src:
        k = rng.randint(0, max_depth)
        rules.append((s, "".join(rng.choice("01") for _ in range(k))))
    return PrefixMap(rules)


def random_partition(rng: random.Random, n: int, max_depth: int = 5) -> Partition:
    """``n`` cells, each a random union of words of a random complete prefix code."""
    size = rng.randint(n, max(n, 1 << max_depth))
    words = prefix_code(rng, size, max_depth)
    rng.shuffle(words)
    groups: list = [[w] for w in words[:n]]
    for w in words[n:]:
        groups[rng.randrange(n)].append(w)
    return Partition([Clopen(g) for g in groups])


def random_point(rng: random.Random, max_pre: int = 8, max_per: int = 6) -> Point:
    pre = "".join(rng.choice("01") for _ in range(rng.randint(0, max_pre)))
    per = "".join(rng.choice("01") for _ in range(rng.randint(1, max_per)))
    return Point(pre, per)


def random_endfree_digraph(rng: random.Random, n: int, extra: float = 0.3,
                           labels: Sequence[Clopen] | None = None) -> Digraph:
    """A random digraph on ``range(n)`` in which every vertex has in- and out-edges."""
    edges = set()
    perm = list(range(n))
    rng.shuffle(perm)
    for i in range(n):  # a random permutation guarantees no ends
        edges.add((i, perm[i]))
    for u in range(n):
        for v in range(n):
            if rng.random() < extra / max(1, n) * 3:
                edges.add((u, v))
    return Digraph(tuple(range(n)), frozenset(edges), labels)
