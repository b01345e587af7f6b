import math
from collections import Counter

import pytest

from cantordyn.approx import realize
from cantordyn.core import Clopen, Partition, PrefixMap, image, iterate, refinement_map
from cantordyn.digraph import Digraph, build_gr, classify_all
from cantordyn.generic import (ContWitness, HomWitness, StageOverflow, attach_loops, check_property_P,
                               check_property_Q, designated_loops, f_admissible, generic_cont, generic_hom,
                               h_regular, increase_bar, q_schedule, strict_check, sub_type, subballoon_type, subdumbbell_type,
                               witnesses_from_json, witnesses_to_json)

SWAP = PrefixMap([("0", "1"), ("1", "0")])


def brute_q(m_max: int) -> list:
    """Least multiple of ``m`` above the previous value with ``(m-1)! | q_m!/q_{m-1}!``."""
    out, prev = [], 1
    for m in range(1, m_max + 1):
        q = next(q for q in range(prev + 1, 10 ** 3)
                 if q % m == 0 and (math.factorial(q) // math.factorial(prev)) % math.factorial(m - 1) == 0)
        out.append(q)
        prev = q
    return out


def kinds(f, P):
    return [k for _, k in classify_all(build_gr(f, P))]


def dumbbell_2_1_2():
    P = Partition.from_words(["000", "001", "01", "10", "11"])
    G = Digraph(range(5), {(0, 1), (1, 0), (0, 2), (2, 3), (3, 4), (4, 3)}, P.cells)
    return realize(G)[0], P


def test_q_schedule():
    assert q_schedule(3) == brute_q(3) == [2, 4, 6]
    with pytest.raises(StageOverflow):
        q_schedule(4)
    with pytest.raises(ValueError):
        q_schedule(0)


def test_generic_overflow():
    with pytest.raises(StageOverflow):
        generic_hom(4)


def test_hom_witnesses(hom2):
    h, ws = hom2
    assert h.is_homeomorphism()
    for m, w in enumerate(ws, 1):
        assert check_property_P(h, w, m)
        assert w.weight == math.factorial(w.q)
        # every component is a balanced dumbbell with plate weight q!
        assert {(k.kind, k.params[0], k.params[2]) for k in kinds(h, w.P)} == {("dumbbell", w.weight, w.weight)}
        assert h_regular(h, w.P, w.loops) == w.weight
    assert refinement_map(ws[1].P, ws[0].P) is not None


def test_hom_loops_are_invariant(hom1):
    h, ws = hom1
    w = ws[0]
    hr = iterate(h, w.weight)
    ks = kinds(h, w.P)
    assert len(w.loops) == len(ks)
    for (a, b), k in zip(w.loops, ks):
        assert image(hr, a) == a and a <= w.P[k.u[0]]
        assert image(hr, b) == b and b <= w.P[k.w[0]]


def test_property_P_rejections(hom1):
    h, ws = hom1
    P2 = Partition.from_words(["0", "1"])
    assert not check_property_P(SWAP, HomWitness(P2, 2, ()), 1)
    # the plate weight must be q!, so a wrong q fails
    assert not check_property_P(h, HomWitness(ws[0].P, 3, ws[0].loops), 2)
    # the witness map must be a homeomorphism
    assert not check_property_P(PrefixMap([("0", "00"), ("1", "01")]), ws[0], 1)


def test_cont_witnesses(cont2):
    f, ws = cont2
    for m, w in enumerate(ws, 1):
        assert check_property_Q(f, w, m)
        ks = kinds(f, w.P)
        assert all(k.kind == "balloon" and k.params == (w.weight, w.weight) for k in ks)
        assert all(strict_check(f, w.P, i) for i in range(len(ks)))
        assert f_admissible(f, w.P) == w.weight


def test_property_Q_rejections(cont1):
    f, ws = cont1
    assert not check_property_Q(f, ContWitness(ws[0].P, 3), 2)
    assert not check_property_Q(PrefixMap.identity(), ContWitness(Partition([Clopen.whole()]), 1), 1)


def test_strict_check_examples():
    # the identity maps the cell onto itself, which is not a proper inclusion
    assert not strict_check(PrefixMap.identity(), Partition([Clopen.whole()]), 0)
    # x -> 10x on the loop cell: image strictly inside
    assert strict_check(PrefixMap([("0", "10"), ("1", "10")]), Partition.from_words(["0", "1"]), 0)


def test_increase_bar():
    g, P = dumbbell_2_1_2()
    for side in ("left", "right"):
        P2 = increase_bar(g, P, 0, side)
        assert P2.refines(P)
        [k] = kinds(g, P2)
        assert k.describe() == "Dumbbell(2,2,2)"
    balloon = PrefixMap([("0", "10"), ("1", "11")])
    with pytest.raises(ValueError):
        increase_bar(balloon, Partition.from_words(["0", "1"]), 0, "left")


def test_attach_loops():
    P = Partition.from_words(["0", "10", "11"])
    G = Digraph((0, 1, 2), {(0, 0), (0, 1), (1, 2), (2, 2)}, P.cells)
    g, _ = realize(G)
    h = attach_loops(g, P)
    [k] = kinds(h, P)
    assert k.describe() == "Dumbbell(1,1,1)"
    a, b = designated_loops(h, P, k)
    assert image(h, a) == a and image(h, b) == b
    assert h_regular(h, P) == 1
    assert h_regular(SWAP, Partition.from_words(["0", "1"])) is None


def brute_sub_type(Df, Dc, nu) -> int:
    cells = {nu[x] for x in Df.u + Df.v + Df.w}
    if cells <= set(Dc.u):
        return 1
    if cells <= set(Dc.w):
        return 2
    return 3


def test_subdumbbell_types(hom2):
    h, ws = hom2
    Pf, Pc = ws[1].P, ws[0].P
    nu = refinement_map(Pf, Pc)
    Dc, Df = kinds(h, Pc), kinds(h, Pf)
    seen = Counter()
    for kf in Df:
        [kc] = [k for k in Dc if nu[kf.u[0]] in k.u + k.v + k.w]
        typ, _ = sub_type(kf, kc, nu)
        assert typ == brute_sub_type(kf, kc, nu)
        info = subdumbbell_type(h, Pf, Pc, kf, kc)
        assert info.type == typ and info.P.refines(Pc)
        # after the bar increases the subdumbbell is normalized
        assert sub_type(info.D, kc, refinement_map(info.P, Pc)) == (typ, True)
        seen[typ] += 1
    assert set(seen) == {1, 2, 3}


def test_subdumbbell_not_contained(hom2):
    h, ws = hom2
    nu = refinement_map(ws[1].P, ws[0].P)
    Dc, Df = kinds(h, ws[0].P), kinds(h, ws[1].P)
    other = [k for k in Dc if nu[Df[0].u[0]] not in k.u + k.v + k.w]
    with pytest.raises(ValueError):
        subdumbbell_type(h, ws[1].P, ws[0].P, Df[0], other[0])


def test_subballoon_type(cont2):
    f, ws = cont2
    Pf, Pc = ws[1].P, ws[0].P
    nu = refinement_map(Pf, Pc)
    Bc, Bf = kinds(f, Pc), kinds(f, Pf)
    for kf in Bf:
        [kc] = [k for k in Bc if nu[kf.v[0]] in k.v + k.w]
        assert subballoon_type(f, Pf, Pc, kf, kc) == nu[kf.v[0]]


def test_witness_json_roundtrip(hom1, cont1):
    for _, ws in (hom1, cont1):
        back = witnesses_from_json(witnesses_to_json(ws))
        assert [(w.P, w.q) for w in back] == [(w.P, w.q) for w in ws]
    h, ws = hom1
    assert witnesses_from_json(witnesses_to_json(ws))[0].loops == ws[0].loops


def test_generators_are_seeded():
    assert generic_cont(1, seed=9)[0] == generic_cont(1, seed=9)[0]
    assert generic_cont(1, seed=9)[0] != generic_cont(1, seed=10)[0]
