"""
Conjugacy schedules.

A schedule pairs decreasing partition sequences ``(P_n)`` for ``f`` and
``(Q_n)`` for ``g`` with graph maps ``nu_n``.  In ``iso`` mode every ``nu_n`` is
an isomorphism ``gr(f, P_n) -> gr(g, Q_n)``; in ``alternating`` mode ``nu_n``
goes ``f -> g`` for odd ``n`` and ``g -> f`` for even ``n`` and is only required
to be surjective.  Commuting with refinements is checked three ways (the
refinement squares, the inclusions between stages, and the accumulated
images), and a commuting schedule yields stage homeomorphisms converging to
a conjugacy.

Stages are numbered from 1 in messages and reports; lists are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .approx import ContractViolation, split_clopen
from .core import (Clopen, Partition, PrefixMap, clopen_bijection, compose, image, mesh,
                   refinement_map, sup_dist)
from .digraph import ComponentKind, GraphMap, build_gr, check_graph_map, classify_all
from .generic import sub_type
from .verdict import PASS, Verdict


class ScheduleError(ValueError):
    """A schedule could not be built or used; the message names the obstruction."""


class WitnessShortage(ScheduleError):
    def __init__(self, needed: int, have: int):
        self.needed = needed
        self.have = have
        super().__init__(f"witnesses cover {have} stages; {needed - have} more needed")


class CardinalityError(ScheduleError):
    def __init__(self, kind, have: int, need: int, where: str = ""):
        self.kind = kind
        super().__init__(f"type {kind} is deficient{where}: {have} source pieces for {need} targets")


# ---------------------------------------------------------------------------
# data

@dataclass(frozen=True)
class Stage:
    """One stage: partitions ``P`` (for f) and ``Q`` (for g) and the map ``nu``.

    ``direction`` is ``"fg"`` when ``nu`` maps cells of ``P`` to cells of ``Q``
    and ``"gf"`` for the reverse.  Vertex ids are cell indices.
    """

    P: Partition
    Q: Partition
    nu: GraphMap
    direction: str = "fg"

    @property
    def table(self) -> tuple:
        vm = self.nu.vertex_map
        return tuple(vm[i] for i in range(len(vm)))

    @property
    def source(self) -> Partition:
        return self.P if self.direction == "fg" else self.Q

    @property
    def target(self) -> Partition:
        return self.Q if self.direction == "fg" else self.P


@dataclass(frozen=True)
class ConjugacySchedule:
    """Stages ``1..N`` and the mode (``"iso"`` or ``"alternating"``)."""

    stages: tuple
    mode: str = "alternating"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.mode not in ("iso", "alternating"):
            raise ValueError("mode must be 'iso' or 'alternating'")

    def __len__(self):
        return len(self.stages)

    def tables(self) -> list:
        if "tables" not in self._cache:
            self._cache["tables"] = [st.table for st in self.stages]
        return self._cache["tables"]

    def ancestors(self, side: str, m: int, n: int) -> tuple:
        """Index map from the stage-``m`` cells of ``side`` ("P" or "Q") to stage ``n <= m``."""
        key = ("anc", side, m, n)
        if key not in self._cache:
            if m == n:
                k = len(getattr(self.stages[m], side))
                self._cache[key] = tuple(range(k))
            else:
                step = refinement_map(getattr(self.stages[m], side), getattr(self.stages[m - 1], side))
                if step is None:
                    raise ScheduleError(f"{side}_{m + 1} does not refine {side}_{m}")
                up = self.ancestors(side, m - 1, n)
                self._cache[key] = tuple(up[x] for x in step)
        return self._cache[key]

    def to_json(self) -> dict:
        return {"mode": self.mode,
                "stages": [{"direction": st.direction, "P": st.P.to_json(), "Q": st.Q.to_json(),
                            "nu": list(st.table)} for st in self.stages]}


def make_stage(f: PrefixMap, g: PrefixMap, P: Partition, Q: Partition, table, direction: str = "fg") -> Stage:
    """Build a stage from a cell-index table, with the transition digraphs attached."""
    Gf, Gg = build_gr(f, P), build_gr(g, Q)
    src, tgt = (Gf, Gg) if direction == "fg" else (Gg, Gf)
    return Stage(P, Q, GraphMap(src, tgt, dict(enumerate(table))), direction)


def _sides(st_dir: str) -> tuple:
    return ("P", "Q") if st_dir == "fg" else ("Q", "P")


def validate(s: ConjugacySchedule) -> Verdict:
    """Structural checks: refinement, directions, graph maps and (iso) bijectivity."""
    for k, st in enumerate(s.stages):
        want = "fg" if s.mode == "iso" or k % 2 == 0 else "gf"
        if st.direction != want:
            return Verdict.fail(f"stage {k + 1} has direction {st.direction}, expected {want}")
        ok, e = check_graph_map(st.nu)
        if not ok:
            return Verdict.fail(f"stage {k + 1}: edge {e} is not mapped to an edge", (k + 1, e))
        if not st.nu.surjective:
            return Verdict.fail(f"stage {k + 1}: nu is not surjective", k + 1)
        if s.mode == "iso" and len(set(st.table)) != len(st.table):
            return Verdict.fail(f"stage {k + 1}: nu is not injective", k + 1)
        if k:
            for side in "PQ":
                try:
                    s.ancestors(side, k, k - 1)
                except ScheduleError as exc:
                    return Verdict.fail(str(exc))
    return PASS


# ---------------------------------------------------------------------------
# the three commuting conditions

def _nu(s: ConjugacySchedule, k: int) -> tuple:
    return s.tables()[k]


def condition_i(s: ConjugacySchedule) -> Verdict:
    """The refinement squares commute for every pair of consecutive stages."""
    N = len(s)
    for n in range(N - 1):
        a, b = _nu(s, n), _nu(s, n + 1)
        iP = s.ancestors("P", n + 1, n)
        jQ = s.ancestors("Q", n + 1, n)
        if s.mode == "iso":
            for x in range(len(b)):
                if jQ[b[x]] != a[iP[x]]:
                    return Verdict.fail(f"square at stage {n + 1} fails at cell {x}", (n + 1, n + 2, x))
        elif n % 2 == 0:
            # j_n = nu_n . i_n . nu_{n+1} on Q_{n+1}
            for c in range(len(b)):
                if jQ[c] != a[iP[b[c]]]:
                    return Verdict.fail(f"square at stage {n + 1} fails at cell {c}", (n + 1, n + 2, c))
        else:
            # i_n = nu_n . j_n . nu_{n+1} on P_{n+1}
            for x in range(len(b)):
                if iP[x] != a[jQ[b[x]]]:
                    return Verdict.fail(f"square at stage {n + 1} fails at cell {x}", (n + 1, n + 2, x))
    return PASS


def condition_ii(s: ConjugacySchedule) -> Verdict:
    """Inclusions (equalities in iso mode) between every pair of stages ``m >= n``."""
    N = len(s)
    for n in range(N):
        nn = _nu(s, n)
        for m in range(n, N):
            nm = _nu(s, m)
            if s.mode == "iso":
                aP = s.ancestors("P", m, n)
                aQ = s.ancestors("Q", m, n)
                lhs: dict = {}
                for x in range(len(nm)):
                    lhs.setdefault(aP[x], set()).add(nm[x])
                rhs: dict = {}
                for c in range(len(aQ)):
                    rhs.setdefault(aQ[c], set()).add(c)
                for a in range(len(nn)):
                    if lhs.get(a, set()) != rhs.get(nn[a], set()):
                        return Verdict.fail(f"nu_{m + 1}(a) != nu_{n + 1}(a) for cell {a}", (n + 1, m + 1, a))
                continue
            dom, cod = _sides(s.stages[n].direction)
            aD = s.ancestors(dom, m, n)
            aC = s.ancestors(cod, m, n)
            if (m - n) % 2 == 0:
                # nu_m(a) inside nu_n(a): stage m has the same direction as stage n
                for x in range(len(nm)):
                    if aC[nm[x]] != nn[aD[x]]:
                        return Verdict.fail(f"nu_{m + 1}(a) not inside nu_{n + 1}(a) at cell {x}",
                                            (n + 1, m + 1, aD[x]))
            else:
                # nu_m^{-1}(a) inside nu_n(a): stage m maps the codomain side back
                for c in range(len(nm)):
                    if aC[c] != nn[aD[nm[c]]]:
                        return Verdict.fail(f"nu_{m + 1}^-1(a) not inside nu_{n + 1}(a) at cell {c}",
                                            (n + 1, m + 1, aD[nm[c]]))
    return PASS


@dataclass(frozen=True)
class NuClosure:
    """Accumulated images per stage.

    ``parts[(n, m)][a]`` is ``nu_m(a)`` (or ``nu_m^-1(a)`` when the directions
    of stages ``n`` and ``m`` differ); ``closure[n][a]`` is their union over
    ``m >= n`` and ``meshes[n]`` its mesh.  Indices are 0-based.
    """

    mode: str
    parts: dict
    closure: tuple
    meshes: tuple


def nu_closure(s: ConjugacySchedule) -> NuClosure:
    """Compute the accumulated images of every cell at every stage as clopen sets."""
    N = len(s)
    parts: dict = {}
    closure = []
    for n in range(N):
        st = s.stages[n]
        dom, cod = _sides(st.direction)
        n_dom = len(getattr(st, dom))
        acc: list = [[] for _ in range(n_dom)]
        for m in range(n, N):
            nm = _nu(s, m)
            stm = s.stages[m]
            buckets: list = [[] for _ in range(n_dom)]
            if s.mode == "iso" or (m - n) % 2 == 0:
                aD = s.ancestors(dom, m, n)
                cells = getattr(stm, cod)
                for x in range(len(nm)):
                    buckets[aD[x]].extend(cells[nm[x]].intervals)
            else:
                aD = s.ancestors(dom, m, n)
                cells = getattr(stm, cod)
                for c in range(len(nm)):
                    buckets[aD[nm[c]]].extend(cells[c].intervals)
            sets = tuple(Clopen._from_ivs(b) for b in buckets)
            parts[(n, m)] = sets
            for a in range(n_dom):
                acc[a].extend(sets[a].intervals)
        closure.append(tuple(Clopen._from_ivs(b) for b in acc))
    meshes = tuple(mesh(c) for c in closure)
    return NuClosure(s.mode, parts, tuple(closure), meshes)


def condition_iii(s: ConjugacySchedule, nc: NuClosure | None = None) -> Verdict:
    """The accumulated image of every cell equals its stage image."""
    nc = nu_closure(s) if nc is None else nc
    for n, st in enumerate(s.stages):
        cod = _sides(st.direction)[1]
        cells = getattr(st, cod)
        nn = _nu(s, n)
        for a, X in enumerate(nc.closure[n]):
            if X != cells[nn[a]]:
                return Verdict.fail(f"accumulated image of cell {a} at stage {n + 1} is larger "
                                    f"than its image", (n + 1, a))
    return PASS


def commutes_check(s: ConjugacySchedule) -> Verdict:
    """Whether the schedule commutes with refinements (all stage pairs).

    Returns a failing ``Verdict`` whose witness is ``(n, m, cell)`` (1-based
    stages) for the first violated inclusion.
    """
    return condition_ii(s)


def asym_commutes_check(s: ConjugacySchedule, bounds) -> Verdict:
    """Whether the mesh of the accumulated images at stage ``n`` is at most ``bounds[n-1]``."""
    nc = nu_closure(s)
    for n, (mh, b) in enumerate(zip(nc.meshes, bounds)):
        if mh > Fraction(b):
            return Verdict.fail(f"stage {n + 1}: closure mesh {mh} exceeds {b}", (n + 1, mh))
    return Verdict(True, None, nc.meshes)


def inverse_schedule(s: ConjugacySchedule) -> ConjugacySchedule:
    """The iso schedule of the inverses ``nu_n^-1`` (roles of f and g exchanged)."""
    if s.mode != "iso":
        raise ValueError("only iso schedules have inverse schedules")
    out = []
    for st in s.stages:
        inv = {v: k for k, v in st.nu.vertex_map.items()}
        out.append(Stage(st.Q, st.P, GraphMap(st.nu.target, st.nu.source, inv), "fg"))
    return ConjugacySchedule(tuple(out), "iso")


def alternate(s: ConjugacySchedule) -> ConjugacySchedule:
    """Turn an iso schedule into an alternating one (inverting the even stages)."""
    if s.mode != "iso":
        raise ValueError("expected an iso schedule")
    out = []
    for k, st in enumerate(s.stages):
        if k % 2 == 0:
            out.append(st)
        else:
            inv = {v: x for x, v in st.nu.vertex_map.items()}
            out.append(Stage(st.P, st.Q, GraphMap(st.nu.target, st.nu.source, inv), "gf"))
    return ConjugacySchedule(tuple(out), "alternating")


def schedule_from_conjugacy(f: PrefixMap, h: PrefixMap, partitions) -> tuple:
    """``(g, schedule)`` with ``g = h f h^-1`` and ``nu_n(a) = h(a)``.

    ``partitions`` is a decreasing sequence ``P_n``; ``Q_n`` is its image.
    """
    g = compose(compose(h.inverse(), f), h)
    stages = []
    for P in partitions:
        Q = Partition([image(h, c) for c in P.cells], check=False)
        stages.append(make_stage(f, g, P, Q, list(range(len(P)))))
    return g, ConjugacySchedule(tuple(stages), "iso")


# ---------------------------------------------------------------------------
# stage homeomorphisms and the conjugator

def stage_hom(nu: GraphMap, direction: str = "fg") -> PrefixMap:
    """A homeomorphism realizing ``nu`` on cells.

    Each target cell ``c`` is split into as many pieces as it has preimages
    and the preimage cells (in index order) are mapped onto the pieces in
    order, so ``h(a)`` lies in ``nu(a)`` and the images of ``nu^-1(c)`` cover
    ``c``.  For an isomorphism this is ``h(a) = nu(a)``.  ``direction`` only
    documents which way the map points.
    """
    if nu.source.labels is None or nu.target.labels is None:
        raise ValueError("stage_hom needs partition-labeled digraphs")
    if not nu.surjective:
        raise ValueError("nu is not surjective")
    src, tgt = nu.source, nu.target
    pre: dict = {}
    for v in src.vertices:
        pre.setdefault(nu.vertex_map[v], []).append(v)
    rules = []
    for c, vs in pre.items():
        cell = tgt.label(c)
        pieces = [cell] if len(vs) == 1 else split_clopen(cell, len(vs))
        for v, piece in zip(vs, pieces):
            rules.extend(clopen_bijection(src.label(v), piece))
    return PrefixMap(rules, check="complete")


@dataclass(frozen=True)
class ConjugatorReport:
    """Per-stage maps, residuals and Cauchy evidence of a schedule."""

    maps: tuple
    residuals: tuple
    cauchy: tuple
    closure_meshes: tuple

    def to_json(self) -> dict:
        def conv(row):
            return {k: (str(Fraction(v)) if isinstance(v, Fraction) else v) for k, v in row.items()}
        return {"residuals": [conv(r) for r in self.residuals],
                "cauchy": [conv(c) for c in self.cauchy],
                "closure_meshes": [str(Fraction(m)) for m in self.closure_meshes]}


def conjugator_report(s: ConjugacySchedule, f: PrefixMap, g: PrefixMap) -> ConjugatorReport:
    """Build every stage map and the exact residual and Cauchy evidence.

    Every stage yields an f-to-g map ``h_n``: ``stage_hom(nu_n)`` on f-to-g
    stages and the inverse of ``t_n = stage_hom(nu_n)`` on g-to-f stages.
    The residual ``sup_dist(h_n f, g h_n)`` is reported against
    ``mesh(Q_n) + mesh(g(Q_n))``; the bound is guaranteed on f-to-g stages and
    a ``ContractViolation`` is raised if it fails there.  On g-to-f stages the
    guaranteed mirror ``sup_dist(t_n g, f t_n) <= mesh(P_n) + mesh(f(P_n))`` is
    checked as well and reported under ``mirror``.

    Cauchy rows compare ``h_m`` with ``h_n`` (f-to-g stage ``n``) or ``t_m`` with
    ``t_n`` (g-to-f stage ``n``) for all ``m > n`` against the closure mesh of
    stage ``n``; these bounds are guaranteed and checked.
    """
    v = commutes_check(s)
    if not v:
        raise ScheduleError(f"schedule does not commute with refinements: {v.reason}")
    nc = nu_closure(s)
    raw = [stage_hom(st.nu, st.direction) for st in s.stages]
    fwd = [t if st.direction == "fg" else t.inverse() for st, t in zip(s.stages, raw)]
    back = [t.inverse() if st.direction == "fg" else t for st, t in zip(s.stages, raw)]
    residuals = []
    for k, (st, hk) in enumerate(zip(s.stages, fwd)):
        res = sup_dist(compose(f, hk), compose(hk, g))
        bound = mesh(st.Q.cells) + mesh(image(g, c) for c in st.Q.cells)
        row = {"stage": k + 1, "direction": st.direction, "residual": res, "bound": bound}
        if st.direction == "fg" and res > bound:
            raise ContractViolation(f"stage {k + 1}: residual {res} exceeds {bound}")
        if st.direction == "gf":
            tk = raw[k]
            mres = sup_dist(compose(g, tk), compose(tk, f))
            mbound = mesh(st.P.cells) + mesh(image(f, c) for c in st.P.cells)
            if mres > mbound:
                raise ContractViolation(f"stage {k + 1}: mirrored residual {mres} exceeds {mbound}")
            row.update(mirror=mres, mirror_bound=mbound)
        residuals.append(row)
    cauchy = []
    for n, st in enumerate(s.stages):
        fam = fwd if st.direction == "fg" else back
        for m in range(n + 1, len(s)):
            d = sup_dist(fam[m], fam[n])
            bound = nc.meshes[n]
            if d > bound:
                raise ContractViolation(f"Cauchy bound fails for stages {n + 1}, {m + 1}: {d} > {bound}")
            cauchy.append({"n": n + 1, "m": m + 1, "maps": "h" if st.direction == "fg" else "t",
                           "dist": d, "bound": bound})
    return ConjugatorReport(tuple(fwd), tuple(residuals), tuple(cauchy), nc.meshes)


def conjugator(s: ConjugacySchedule, f: PrefixMap, g: PrefixMap) -> tuple:
    """Finite-stage conjugator of a commuting schedule.

    Returns
    -------
    h_N : PrefixMap
        The deepest stage map, pointing from f to g.
    cauchy : list of dict
        Rows ``{"n", "m", "maps", "dist", "bound"}`` (see ``conjugator_report``).
    residuals : list of dict
        Rows ``{"stage", "direction", "residual", "bound", ...}``.

    Raises
    ------
    ScheduleError
        If the schedule does not commute with refinements.
    """
    rep = conjugator_report(s, f, g)
    return rep.maps[-1], list(rep.cauchy), list(rep.residuals)


def identity_schedule(f: PrefixMap, partitions) -> ConjugacySchedule:
    """The iso schedule of ``f`` with itself whose maps are all identities."""
    return ConjugacySchedule(tuple(make_stage(f, f, P, P, list(range(len(P)))) for P in partitions), "iso")



# ---------------------------------------------------------------------------
# back and forth

def _comp_key(P: Partition, k: ComponentKind) -> tuple:
    return min(P[x].first_word() for x in k.u + k.v + k.w)


def _round_robin(src: list, tgt: list) -> dict:
    return {i: tgt[i % len(tgt)] for i in range(len(src))}


def _dumbbell_map(a: ComponentKind, b: ComponentKind) -> dict:
    """The surjection of dumbbell ``a`` onto ``b`` preserving bars and edges."""
    ra, la, ta = a.params
    rb, lb, tb = b.params
    if la != lb:
        raise ScheduleError(f"bar lengths differ: {a.describe()} vs {b.describe()}")
    if ra % rb or ta % tb:
        raise ScheduleError(f"plate weights of {b.describe()} do not divide those of {a.describe()}")
    out = {x: b.u[i % rb] for i, x in enumerate(a.u)}
    out.update(zip(a.v, b.v))
    out.update({x: b.w[i % tb] for i, x in enumerate(a.w)})
    return out


def _walk(k: ComponentKind) -> tuple:
    return k.v + k.w


def _balloon_map(a: ComponentKind, b: ComponentKind) -> dict:
    """The surjection of balloon ``a`` onto ``b`` sending the initial vertex to the initial vertex."""
    sa, ta = a.params
    sb, tb = b.params
    if ta % tb:
        raise ScheduleError(f"loop of {b.describe()} does not divide that of {a.describe()}")
    wa, wb = _walk(a), _walk(b)
    out = {}
    for p, x in enumerate(wa):
        q = p if p < sb else sb + (p - sb) % tb
        if p >= sa and q < sb:
            raise ScheduleError(f"cannot map {a.describe()} onto {b.describe()} preserving the start")
        out[x] = wb[q]
    return out


def _level(S: PrefixMap, P: Partition) -> list:
    kinds = [k for _, k in classify_all(build_gr(S, P))]
    kinds.sort(key=lambda k: _comp_key(P, k))
    return kinds


def _align_bars(S: PrefixMap, P: Partition, kinds: list, target: int, nxt: Partition | None) -> tuple:
    """Increase bars (left side) of short dumbbells to ``target``; keep the next stage a refinement."""
    from .generic import increase_bar
    changed = False
    while True:
        short = [k for k in kinds if k.params[1] < target]
        if not short:
            break
        P = increase_bar(S, P, short[0], "left")
        kinds = _level(S, P)
        changed = True
    if changed and nxt is not None and refinement_map(nxt, P) is None:
        raise ScheduleError("aligning the bars breaks refinement with the next witness partition")
    return P, kinds


def _first_stage(f, Pf, g, Qg, kind, nxt_f, nxt_g) -> tuple:
    A, B = _level(f, Pf), _level(g, Qg)
    if len(A) < len(B):
        raise CardinalityError("component", len(A), len(B), " at stage 1")
    if kind == "hom":
        for k in A + B:
            if k.kind != "dumbbell":
                raise ScheduleError(f"stage 1 component is {k.describe()}, not a dumbbell")
        bar = max(k.params[1] for k in A + B)
        Pf, A = _align_bars(f, Pf, A, bar, nxt_f)
        Qg, B = _align_bars(g, Qg, B, bar, nxt_g)
    else:
        for k in A + B:
            if k.kind != "balloon":
                raise ScheduleError(f"stage 1 component is {k.describe()}, not a balloon")
    phi = _round_robin(A, B)
    table: dict = {}
    for i, a in enumerate(A):
        table.update(_dumbbell_map(a, phi[i]) if kind == "hom" else _balloon_map(a, phi[i]))
    return Pf, Qg, [table[x] for x in range(len(Pf))]


def _parent_comp(coarse_kinds: list) -> dict:
    out = {}
    for i, k in enumerate(coarse_kinds):
        for x in k.u + k.v + k.w:
            out[x] = i
    return out


def _next_stage(S, Sn, Sprev, T, Tn, Tprev, prev_table, kind, n) -> list:
    """``nu_n : gr(S, Sn) -> gr(T, Tn)`` given ``nu_{n-1} : gr(T, Tprev) -> gr(S, Sprev)``."""
    Sk, Tk = _level(S, Sn), _level(T, Tn)
    Sc, Tc = _level(S, Sprev), _level(T, Tprev)
    nuS = refinement_map(Sn, Sprev)
    nuT = refinement_map(Tn, Tprev)
    if nuS is None or nuT is None:
        raise ScheduleError(f"stage {n} witness partitions are not refinements")
    pS, pT = _parent_comp(Sc), _parent_comp(Tc)

    def types(kinds, coarse, nu, parent):
        out: dict = {}
        for k in kinds:
            D = parent[nu[k.v[0]]] if k.v else parent[nu[k.w[0]]]
            Dk = coarse[D]
            if kind == "hom":
                t, ok = sub_type(k, Dk, nu)
                if not ok:
                    raise ScheduleError(f"stage {n}: a type-{t} subdumbbell is not in normalized position")
                out.setdefault(D, {}).setdefault(t, []).append(k)
            else:
                out.setdefault(D, {}).setdefault(nu[k.v[0]], []).append(k)
        return out

    S_sub = types(Sk, Sc, nuS, pS)
    T_sub = types(Tk, Tc, nuT, pT)
    table: dict = {}
    for Di, Dk in enumerate(Sc):
        # components of T at the previous stage mapped onto Dk
        pre = [j for j, Ek in enumerate(Tc) if pS[prev_table[Ek.w[0]]] == Di]
        groups: dict = {}
        for j in pre:
            for t, ks in T_sub.get(j, {}).items():
                key = t if kind == "hom" else prev_table[t]
                groups.setdefault(key, []).extend(ks)
        for t, srcs in sorted(S_sub.get(Di, {}).items()):
            tgts = groups.get(t, [])
            if len(srcs) < len(tgts) or (srcs and not tgts):
                raise CardinalityError(t, len(srcs), len(tgts), f" at stage {n}")
            srcs = sorted(srcs, key=lambda k: _comp_key(Sn, k))
            tgts = sorted(tgts, key=lambda k: _comp_key(Tn, k))
            phi = _round_robin(srcs, tgts)
            for i, a in enumerate(srcs):
                table.update(_dumbbell_map(a, phi[i]) if kind == "hom" else _balloon_map(a, phi[i]))
        for t, tgts in groups.items():
            if tgts and t not in S_sub.get(Di, {}):
                raise CardinalityError(t, 0, len(tgts), f" at stage {n}")
    if len(table) != len(Sn):
        raise ContractViolation(f"stage {n}: nu is not total")
    return [table[x] for x in range(len(Sn))]


def _back_and_forth(f, Pf: list, g, Qg: list, stages: int, kind: str) -> ConjugacySchedule:
    if stages < 1:
        raise ValueError("stages must be at least 1")
    have = min(len(Pf), len(Qg))
    if stages > have:
        raise WitnessShortage(stages, have)
    P, Q = list(Pf[:stages]), list(Qg[:stages])
    nxt_f = P[1] if stages > 1 else None
    nxt_g = Q[1] if stages > 1 else None
    P[0], Q[0], t1 = _first_stage(f, P[0], g, Q[0], kind, nxt_f, nxt_g)
    tables = [t1]
    for n in range(1, stages):
        if n % 2 == 1:
            tables.append(_next_stage(g, Q[n], Q[n - 1], f, P[n], P[n - 1], tables[-1], kind, n + 1))
        else:
            tables.append(_next_stage(f, P[n], P[n - 1], g, Q[n], Q[n - 1], tables[-1], kind, n + 1))
    st = [make_stage(f, g, P[n], Q[n], tables[n], "fg" if n % 2 == 0 else "gf") for n in range(stages)]
    s = ConjugacySchedule(tuple(st), "alternating")
    v = validate(s)
    if not v:
        raise ContractViolation(f"back-and-forth produced an invalid schedule: {v.reason}")
    v = commutes_check(s)
    if not v:
        raise ContractViolation(f"back-and-forth schedule does not commute: {v.reason}")
    for side in (P, Q):
        ms = [mesh(x.cells) for x in side]
        if any(b >= a for a, b in zip(ms, ms[1:])):
            raise ContractViolation("stage meshes are not strictly decreasing")
    return s


def back_and_forth_hom(f: PrefixMap, wf, g: PrefixMap, wg, stages: int) -> ConjugacySchedule:
    """Alternating schedule between two maps carrying property-(P) witnesses.

    Stage ``n`` uses the level-``n`` witness partitions of both maps.  Stage 1
    maps components round-robin (after equalizing bar lengths); later stages
    match subdumbbells type by type and map each one onto its partner by the
    bar-preserving surjection, which makes the refinement squares commute.
    The result is verified with ``commutes_check`` before it is returned.

    Raises
    ------
    WitnessShortage
        Fewer witness levels than requested stages.
    CardinalityError
        Some subdumbbell type has more targets than sources.
    """
    return _back_and_forth(f, [w.P for w in wf], g, [w.P for w in wg], stages, "hom")


def back_and_forth_cont(f: PrefixMap, wf, g: PrefixMap, wg, stages: int) -> ConjugacySchedule:
    """Alternating schedule between two maps carrying property-(Q) witnesses.

    Subballoons are grouped by type (the coarse vertex holding their initial
    vertex) and mapped onto partners of a matching type by the surjection
    fixing initial vertices.
    """
    return _back_and_forth(f, [w.P for w in wf], g, [w.P for w in wg], stages, "cont")
