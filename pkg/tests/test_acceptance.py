"""Acceptance criteria, each run at its stated tolerance and time limit.

Every criterion prints one ``PASS``/``FAIL`` line (also collected into the
pytest terminal summary).  Run on its own with::

    pytest tests/test_acceptance.py -v -s
    python tests/test_acceptance.py
"""

import math
import random
import sys
import time
from fractions import Fraction

import pytest

from cantordyn.approx import approximate, realize
from cantordyn.conjugacy import (back_and_forth_cont, back_and_forth_hom, commutes_check, condition_i,
                                 condition_ii, condition_iii, conjugator)
from cantordyn.core import Point, dist, mesh, min_gap, refinement_map, sup_dist
from cantordyn.digraph import build_gr, classify_all, components
from cantordyn.dynamics import (RESEPARATED, OdometerSpec, chain_modulus, chain_violations,
                                equicontinuity_defect, li_yorke_exclusion, odometer_step, omega_covers,
                                periodic_points, random_pseudo_orbit, recurrence_report, shadow, trajectory,
                                walk_prefix_coincidence)
from cantordyn.generic import (check_property_P, check_property_Q, generic_cont, generic_hom, q_schedule)
from cantordyn.sampling import random_endfree_digraph, random_homeomorphism, random_partition

import support

RESULTS = []


def _record(n: int, title: str, ok: bool, elapsed: float, limit: float, detail: str) -> str:
    timed = elapsed < limit
    line = (f"criterion {n} [{title}]: {'PASS' if ok and timed else 'FAIL'} "
            f"({elapsed:.1f}s / {limit:.0f}s){'' if timed else ' TIME LIMIT EXCEEDED'}; {detail}")
    RESULTS.append(line)
    print(line)
    return line


# ---------------------------------------------------------------------------

def crit1():
    rng = random.Random(1)
    fails = 0
    for _ in range(200):
        n = rng.randint(1, 12)
        P = random_partition(rng, n, 5)
        G = random_endfree_digraph(rng, n, labels=P.cells)
        f, _ = realize(G)
        if not build_gr(f, P).same_graph(G):
            fails += 1
    return fails == 0, f"{200 - fails}/200 roundtrips exact"


def crit2():
    rng = random.Random(2)
    fails = []
    for i in range(100):
        f = random_homeomorphism(rng, 5)
        eps = Fraction(1, 2 ** (i % 3 + 1))
        g, P, rep = approximate(f, eps, kind="dumbbell", check=False)
        sd = sup_dist(f, g)
        shapes = [k for _, k in classify_all(build_gr(g, P))]
        want = ("dumbbell", (rep["n"], rep["s"], rep["m"]))
        ok = (sd < eps and mesh(P.cells) < eps and sd <= rep["lift_bound"]
              and len(shapes) == rep["k"] and all((k.kind, k.params) == want for k in shapes))
        if not ok:
            fails.append(i)
    return not fails, f"{100 - len(fails)}/100 approximations meet accuracy, shape and lift bound"


def crit3():
    out = []
    ok = True
    for gen, check in ((generic_hom, check_property_P), (generic_cont, check_property_Q)):
        f, ws = gen(3, seed=0)
        for m, w in enumerate(ws, 1):
            v = check(f, w, m)
            ok &= bool(v)
            out.append(f"{gen.__name__} m={m}: {'ok' if v else v.reason}")
        ok &= all(refinement_map(b.P, a.P) is not None for a, b in zip(ws, ws[1:]))
    qs = q_schedule(3)
    chain = all(qs[m] % ((m + 1) * qs[m - 1]) == 0 for m in range(1, len(qs)))
    detail = "; ".join(out) + f"; q = {qs}, chain q_(m+1) multiple of m*q_m: {chain}"
    return ok and chain, detail


def crit4():
    out = []
    ok = True
    for gen, bf in ((generic_hom, back_and_forth_hom), (generic_cont, back_and_forth_cont)):
        f, wf = gen(3, seed=1)
        g, wg = gen(3, seed=2)
        s = bf(f, wf, g, wg, 3)
        if not commutes_check(s):
            ok = False
            out.append(f"{gen.__name__}: schedule does not commute")
            continue
        _, cauchy, res = conjugator(s, f, g)
        rs = [r["residual"] for r in res]
        bounded = all(r["residual"] <= r["bound"] for r in res)
        nonincr = all(a >= b for a, b in zip(rs, rs[1:]))
        cau = all(c["dist"] <= c["bound"] for c in cauchy)
        ok &= bounded and nonincr and cau
        out.append(f"{gen.__name__}: residuals {[str(r) for r in rs]} <= {[str(r['bound']) for r in res]}"
                   f" bounded={bounded} nonincreasing={nonincr} cauchy={cau}")
    return ok, "; ".join(out)


def crit5():
    rng = random.Random(5)
    agree = 0
    mutants_fail = 0
    for i in range(50):
        _, _, s = support.constructed_schedule(rng, "alternating" if i % 2 else "iso")
        vals = (bool(condition_i(s)), bool(condition_ii(s)), bool(condition_iii(s)))
        agree += len(set(vals)) == 1 and vals[0]
        bad = support.mutate(s, rng)
        mv = (bool(condition_i(bad)), bool(condition_ii(bad)), bool(condition_iii(bad)))
        mutants_fail += mv == (False, False, False)
    return agree == 50 and mutants_fail == 50, f"constructed agreeing and passing {agree}/50, mutants failing all three {mutants_fail}/50"


def crit6():
    h, ws = generic_hom(2, seed=5)
    w = ws[-1]
    mg, eps = min_gap(w.P), mesh(w.P.cells)
    rng = random.Random(6)
    good = 0
    hinv = h.inverse()
    for i in range(50):
        delta = mg * Fraction(rng.randint(1, 99), 100)
        start = rng.choice((0, -50, -99))
        po = random_pseudo_orbit(rng, h, support.random_pt(rng), 100, delta, start=start)
        assert po.check(h) and delta < mg
        z = shadow(h, w, po, verify_witness=(i == 0))
        fwd = trajectory(h, z, po.indices[-1]) if po.indices[-1] >= 0 else [z]
        bwd = trajectory(hinv, z, -po.start) if po.start < 0 else [z]
        orbit = {n: p for n, p in enumerate(fwd)}
        orbit.update({-n: p for n, p in enumerate(bwd)})
        good += all(dist(po[n], orbit[n]) < eps for n in po.indices)
    return good == 50, f"{good}/50 pseudo-orbits shadowed within mesh(P_2) = {eps} (min_gap {mg})"


def crit7():
    rng = random.Random(7)
    out = []
    ok = True
    for gen in (generic_hom, generic_cont):
        f, ws = gen(2, seed=5)
        w = ws[-1]
        bad = 0
        for i in range(200):
            x = support.random_pt(rng, 10, 4)
            y = Point(x.prefix(rng.randint(0, 10)) + support.random_word(rng, 6), "1")
            v = li_yorke_exclusion(f, w, x, y, 500, verify_witness=(i == 0))
            bad += v.verdict == RESEPARATED
        walks = all(walk_prefix_coincidence(C) for C in components(build_gr(f, w.P)))
        ok &= bad == 0 and walks
        out.append(f"{gen.__name__}: {bad}/200 reseparated, walk coincidence {walks}")
    return ok, "; ".join(out)


def cycles(h, ws, x, oc) -> bool:
    """The settled orbit steps through every stage cover one position at a time."""
    traj = trajectory(h, x, oc.settle + len(oc.covers[-1]) + 1)[oc.settle:]
    for w, cover in zip(ws, oc.covers):
        pos = {c: j for j, c in enumerate(cover)}
        idx = [pos.get(w.P.locate(y)) for y in traj]
        if None in idx or any((b - a) % len(cover) != 1 for a, b in zip(idx, idx[1:])):
            return False
    return True


def crit8():
    h, ws = generic_hom(3, seed=7)
    rng = random.Random(8)
    ok = True
    bad = 0
    for _ in range(20):
        x = support.uniform_point(rng)
        oc = omega_covers(h, ws, x)
        sizes = [len(c) for c in oc.covers]
        alpha = oc.alpha.alpha
        mult = all(b == a * al for a, b, al in zip(sizes, sizes[1:], alpha[1:]))
        if not (oc.divisibility and mult and sizes[0] == alpha[0] and cycles(h, ws, x, oc)):
            bad += 1
    spec = OdometerSpec((2, 3, 2))
    per = True
    for k in range(1, 4):
        mk = spec.m[k - 1]
        x = (0,) * 3
        y = x
        for n in range(1, mk + 1):
            y = odometer_step(spec, y)
            if y[:k] == x[:k] and n < mk:
                per = False
        per &= y[:k] == x[:k]
    ok = bad == 0 and per
    return ok, f"{20 - bad}/20 points with cyclic covers of multiplying sizes; odometer periods m = {spec.m} exact: {per}"


def crit9():
    out = []
    ok = True
    h1, w1 = generic_hom(1, seed=3)
    h2, w2 = generic_hom(2, seed=3)
    for h, w in ((h1, w1[0]), (h2, w2[-1])):
        rr = recurrence_report(h, w, verify_witness=False)
        kinds = support.kinds_of(h, w.P)
        sound = all(support.check_nonrecurrence(h, w.P, c, kinds) for c in rr.nonrecurrent)
        ok &= sound and len(rr.nonrecurrent) > 0
        out.append(f"{len(rr.nonrecurrent)} nonrecurrence certificates at q={w.q} sound={sound}")
    bound = 4 * math.factorial(w1[0].q)
    noper = all(not periodic_points(h, bound) for h in (h1, h2))
    ok &= noper
    out.append(f"periodic points up to period {bound}: {'none' if noper else 'found'}")
    f, wc = generic_cont(2, seed=4)
    rng = random.Random(9)
    viol = 0
    tested = 0
    for F, W in ((f, wc), (h2, w2)):
        done = 0
        for _ in range(50):
            x = support.random_pt(rng, 10, 2)
            try:
                d = chain_modulus(F, W, x, Fraction(1, 2), chains=0)
            except ValueError:  # left-loop point that is not certified nonrecurrent
                continue
            viol += chain_violations(F, x, d, Fraction(1, 2), chains=100, length=50, seed=rng.randrange(10 ** 6))
            done += 1
            if done == 5:
                break
        tested += done
        ok &= done == 5
    ok &= viol == 0
    out.append(f"{tested} chain moduli, {viol} violations in 100 chains of length 50 each")
    d = equicontinuity_defect(h2, w2[-1], 0, 3)
    valid = support.check_defect(h2, w2[-1].P, d, support.kinds_of(h2, w2[-1].P)[0])
    ok &= valid
    out.append(f"defect at N=3 valid={valid} (closeness {d.closeness}, separation {d.separation})")
    return ok, "; ".join(out)


CRITERIA = [
    (1, "realization roundtrip", crit1, 10),
    (2, "approximation contract", crit2, 60),
    (3, "generic witnesses", crit3, 30),
    (4, "back-and-forth conjugacy", crit4, 120),
    (5, "commuting characterization", crit5, 30),
    (6, "shadowing", crit6, 30),
    (7, "Li-Yorke exclusion", crit7, 60),
    (8, "odometer omega-limits", crit8, 30),
    (9, "recurrence and chain continuity", crit9, 60),
]


def run(n: int, title: str, fn, limit: float) -> tuple:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported on the same line
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    _record(n, title, ok, elapsed, limit, detail)
    return ok, elapsed, detail


@pytest.mark.acceptance
@pytest.mark.parametrize("n,title,fn,limit", CRITERIA, ids=[f"criterion{c[0]}" for c in CRITERIA])
def test_criterion(n, title, fn, limit):
    ok, elapsed, detail = run(n, title, fn, limit)
    assert ok, detail
    assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"


if __name__ == "__main__":
    good = sum(run(*c)[0] for c in CRITERIA)
    sys.exit(0 if good == len(CRITERIA) else 1)
