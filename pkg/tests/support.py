"""Shared fixtures and independent checkers for the test suite."""

import random

from cantordyn.conjugacy import (ConjugacySchedule, Stage, alternate, identity_schedule,
                                 schedule_from_conjugacy)
from cantordyn.core import Partition, Point, apply, dist, image, min_gap, union_all
from cantordyn.digraph import GraphMap, build_gr, classify_all
from cantordyn.sampling import random_homeomorphism


def random_word(rng: random.Random, n: int) -> str:
    return "".join(rng.choice("01") for _ in range(n))


def random_pt(rng: random.Random, pre: int = 12, per: int = 3) -> Point:
    return Point(random_word(rng, pre), random_word(rng, rng.randint(1, per)))


# ---------------------------------------------------------------------------
# schedules

def constructed_schedule(rng: random.Random, mode: str):
    """``(f, g, schedule)``: a schedule read off an explicit conjugacy ``g = h f h^-1``."""
    f = random_homeomorphism(rng, 4)
    h = random_homeomorphism(rng, 4)
    parts = [Partition.uniform(d) for d in (1, 2, 3)]
    if rng.random() < 0.2:
        return f, f, identity_schedule(f, parts)
    g, s = schedule_from_conjugacy(f, h, parts)
    return f, g, (alternate(s) if mode == "alternating" else s)


def mutate(s: ConjugacySchedule, rng: random.Random) -> ConjugacySchedule:
    """Redirect one entry of a stage ``k >= 2`` to a target cell with another ancestor.

    The new image lies under a different stage-``k-1`` cell, so the refinement
    square at that cell can not commute.
    """
    options = []
    for k in range(1, len(s)):
        st = s.stages[k]
        side = "P" if st.direction == "gf" else "Q"
        anc = s.ancestors(side, k, k - 1)
        t = st.table
        for i in range(len(t)):
            for j in range(len(anc)):
                if anc[j] != anc[t[i]]:
                    options.append((k, i, j))
    k, i, j = rng.choice(options)
    st = s.stages[k]
    table = list(st.table)
    table[i] = j
    bad = Stage(st.P, st.Q, GraphMap(st.nu.source, st.nu.target, dict(enumerate(table))), st.direction)
    return ConjugacySchedule(s.stages[:k] + (bad,) + s.stages[k + 1:], s.mode)


# ---------------------------------------------------------------------------
# independent certificate checks

def orbit_cells(f, x: Point, n: int, P: Partition) -> list:
    out = []
    for _ in range(n + 1):
        out.append(P.locate(x))
        x = apply(f, x)
    return out


def check_nonrecurrence(h, P: Partition, cert, kinds) -> bool:
    """``h^n(A)`` misses ``A`` for every ``n >= 1``, re-derived from scratch.

    With ``v`` the bar cell and ``A = h^offset(v)``, injectivity of ``h`` reduces
    this to ``h^n(v)`` missing ``v``.  The images of ``v`` are followed up to the
    horizon; the last one must sit inside the right-loop region, which is
    forward invariant and disjoint from ``v``.
    """
    k = kinds[cert.component]
    W = union_all(P[c] for c in k.w)
    v = P[cert.bar_cell]
    if image(h, W) - W or (W & v):
        return False
    step = h if cert.offset > 0 else h.inverse()
    A = v
    for _ in range(abs(cert.offset)):
        A = image(step, A)
    if A != cert.set:
        return False
    X = v
    for _ in range(cert.horizon):
        X = image(h, X)
        if X & v:
            return False
    return X <= W


def check_defect(h, P: Partition, d, kind) -> bool:
    """Re-derive the equicontinuity defect pair."""
    u1 = P[kind.u[0]]
    if not (d.Y.contains_point(d.y) and d.Y <= u1):
        return False
    if d.N == 0:
        return True
    if not ((u1 - d.Y).contains_point(d.y2) and dist(d.y, d.y2) == d.closeness):
        return False
    ys = orbit_cells(h, d.y, d.N * d.r, P)
    zs = orbit_cells(h, d.y2, d.exit_step, P)
    if any(c not in kind.u for c in ys) or zs[-1] not in kind.v:
        return False
    a, b = d.y, d.y2
    for _ in range(d.exit_step):
        a, b = apply(h, a), apply(h, b)
    return dist(a, b) == d.separation and d.separation >= min_gap(P)


def kinds_of(f, P: Partition) -> list:
    return [k for _, k in classify_all(build_gr(f, P))]


def uniform_point(rng: random.Random) -> Point:
    return random_pt(rng, 16, 4)

