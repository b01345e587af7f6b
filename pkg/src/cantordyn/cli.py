"""
Command-line front end.

Every command reads and writes JSON; rationals are written exactly as
``"a/b"`` strings.  Exit codes: 0 success, 1 user error or failed check,
2 depth overflow, 3 internal contract violation.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import approx as _approx
from . import conjugacy as _conj
from . import dynamics as _dyn
from . import generic as _gen
from .approx import ContractViolation
from .core import DepthOverflow, Partition, Point, PrefixMap, mesh, min_gap, set_depth_cap
from .digraph import build_gr, classify_all, to_dot

EXIT_USER, EXIT_DEPTH, EXIT_CONTRACT = 1, 2, 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class RunConfig:
    """Parsed command line; identical configs and inputs give identical output bytes."""

    command: str
    args: dict


# ---------------------------------------------------------------------------
# JSON helpers

def _plain(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "to_json"):
        return _plain(obj.to_json())
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def _write(path, obj) -> None:
    text = dumps(obj)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _read(path):
    with open(path) as fh:
        return json.load(fh)


def _rat(text: str) -> Fraction:
    try:
        val = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}")
    return val


def _point(text: str) -> Point:
    """``pre:per`` or ``@file.json``."""
    if text.startswith("@"):
        return Point.from_json(_read(text[1:]))
    pre, _, per = text.partition(":")
    return Point(pre, per or "0")


def _map(path) -> PrefixMap:
    return PrefixMap.from_json(_read(path))


def _witnesses(path) -> list:
    return _gen.witnesses_from_json(_read(path))


def _level(ws, level):
    if not 1 <= level <= len(ws):
        raise UsageError(f"level {level} outside 1..{len(ws)}")
    return ws[level - 1]


def _random_points(seed: int, n: int, depth: int = 12) -> list:
    rng = random.Random(seed)
    return [Point("".join(rng.choice("01") for _ in range(depth)),
                  "".join(rng.choice("01") for _ in range(rng.randint(1, 4)))) for _ in range(n)]


# ---------------------------------------------------------------------------
# commands

def cmd_gen(cfg: RunConfig) -> int:
    a = cfg.args
    fn = _gen.generic_hom if cfg.command == "gen-hom" else _gen.generic_cont
    h, ws = fn(a["m"], seed=a["seed"])
    _write(a["output"], h)
    if a.get("witness"):
        _write(a["witness"], _gen.witnesses_to_json(ws))
    summary = {"rules": len(h.rules), "levels": [{"q": w.q, "cells": len(w.P), "mesh": mesh(w.P.cells)}
                                                 for w in ws]}
    if a.get("report"):
        _write(a["report"], summary)
    return 0


def cmd_gr(cfg: RunConfig) -> int:
    a = cfg.args
    f = _map(a["map"])
    obj = _read(a["partition"])
    if "witnesses" in obj:
        P = _level(_gen.witnesses_from_json(obj), a["level"]).P
    else:
        P = Partition.from_json(obj)
    G = build_gr(f, P)
    if a.get("dot"):
        with open(a["dot"], "w") as fh:
            fh.write(to_dot(G))
    comps = [{"kind": k.kind, "shape": k.describe(), "vertices": list(C.vertices),
              "u": list(k.u), "v": list(k.v), "w": list(k.w)} for C, k in classify_all(G)]
    _write(a.get("output"), {"vertices": len(G.vertices), "edges": sorted(map(list, G.edges)),
                             "components": comps})
    return 0


def cmd_approx(cfg: RunConfig) -> int:
    a = cfg.args
    f = _map(a["map"])
    g, P, report = _approx.approximate(f, a["eps"], kind=a["kind"], partition=a["partition"])
    _write(a["output"], g)
    if a.get("partition_out"):
        _write(a["partition_out"], P)
    report = dict(report)
    report["checks"] = ["sup_dist(f, g) <= mesh(Q) + mesh(f(Q))", "sup_dist(f, g) < eps",
                        "mesh(P) < eps", "components are k copies of the shape"]
    report["eps"] = a["eps"]
    _write(a.get("report"), report)
    return 0


def cmd_conjugate(cfg: RunConfig) -> int:
    a = cfg.args
    if a["stages"] < 1:
        raise UsageError("--stages must be at least 1")
    f, g = _map(a["f"]), _map(a["g"])
    wf, wg = _witnesses(a["witnesses"][0]), _witnesses(a["witnesses"][1])
    if type(wf[0]) is not type(wg[0]):
        raise UsageError("witness files are of different kinds")
    bf = _conj.back_and_forth_hom if isinstance(wf[0], _gen.HomWitness) else _conj.back_and_forth_cont
    s = bf(f, wf, g, wg, a["stages"])
    rep = _conj.conjugator_report(s, f, g)
    _write(a["output"], rep.maps[-1])
    report = {"stages": [{"stage": n + 1, "direction": st.direction, "cells_P": len(st.P),
                          "cells_Q": len(st.Q), "mesh_P": mesh(st.P.cells), "mesh_Q": mesh(st.Q.cells)}
                         for n, st in enumerate(s.stages)],
              "commutes": bool(_conj.commutes_check(s)),
              "checks": ["commutes_check", "residual_n <= mesh(Q_n) + mesh(g(Q_n)) on f-to-g stages",
                         "mirrored residual on g-to-f stages", "Cauchy bounds against closure meshes"],
              **rep.to_json()}
    if a.get("schedule"):
        _write(a["schedule"], s.to_json())
    _write(a.get("report"), report)
    return 0


def _analyze(cfg: RunConfig) -> int:
    a = cfg.args
    what = a["what"]
    f = _map(a["map"])
    ws = _witnesses(a["witness"])
    out: dict = {"analysis": what}
    code = 0
    if what in ("check-p", "check-q"):
        fn = _gen.check_property_P if what == "check-p" else _gen.check_property_Q
        rows = []
        for m, w in enumerate(ws, 1):
            v = fn(f, w, m)
            rows.append({"m": m, "ok": v.ok, "reason": v.reason})
        ok = all(r["ok"] for r in rows)
        if len(ws) > 1:
            chain = [w2.P.refines(w1.P) for w1, w2 in zip(ws, ws[1:])]
            out["refinement"] = chain
            ok = ok and all(chain)
        out.update(ok=ok, levels=rows)
        code = 0 if ok else EXIT_USER
    elif what == "shadow":
        w = _level(ws, a["level"])
        if a.get("pseudo"):
            po = _dyn.PseudoOrbit.from_json(_read(a["pseudo"]))
        else:
            rng = random.Random(a["seed"])
            x = _random_points(a["seed"], 1)[0]
            delta = a["delta"] if a.get("delta") is not None else min_gap(w.P) / 2
            po = _dyn.random_pseudo_orbit(rng, f, x, a["length"] or 100, delta)
        x = _dyn.shadow(f, w, po, eps=a.get("eps"))
        out.update(point=x, case=_dyn.shadow_case(f, w, po), mesh=mesh(w.P.cells), delta=po.delta,
                   min_gap=min_gap(w.P), window=[po.start, po.start + len(po.points) - 1])
    elif what == "liyorke":
        w = _level(ws, a["level"])
        if a.get("x") and a.get("y"):
            pairs = [(a["x"], a["y"])]
        else:
            pts = _random_points(a["seed"], 2 * a["pairs"])
            pairs = list(zip(pts[::2], pts[1::2]))
        rows = []
        for i, (x, y) in enumerate(pairs):
            v = _dyn.li_yorke_exclusion(f, w, x, y, a["horizon"], verify_witness=(i == 0))
            rows.append({"x": x, "y": y, **v.to_json()})
        out.update(pairs=rows, li_yorke_consistent=sum(r["verdict"] == _dyn.RESEPARATED for r in rows))
    elif what == "omega":
        pts = [a["x"]] if a.get("x") else _random_points(a["seed"], a["samples"])
        out["points"] = [{"x": x, **_dyn.omega_covers(f, ws, x, a.get("stages")).to_json()} for x in pts]
    elif what == "recurrence":
        w = _level(ws, a["level"])
        out.update(_dyn.recurrence_report(f, w, a.get("period_bound")).to_json())
    elif what == "chain":
        x = a["x"] or _random_points(a["seed"], 1)[0]
        length = a["length"] or 50
        delta = _dyn.chain_modulus(f, ws, x, a["eps"], chains=a["chains"], length=length, seed=a["seed"])
        out.update(x=x, eps=a["eps"], delta=delta, chains=a["chains"], length=length, violations=0)
    elif what == "defect":
        w = _level(ws, a["level"])
        out.update(_dyn.equicontinuity_defect(f, w, a["component"], a["N"]).to_json())
    _write(a.get("output"), out)
    return code


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cantordyn", description="Exact dynamics on the Cantor space.")
    p.add_argument("--depth-cap", type=int, help="lower the maximal word length")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    for name in ("gen-hom", "gen-cont"):
        q = sub.add_parser(name, help="finite-stage generic map with witnesses")
        q.add_argument("--m", type=int, required=True, help="number of witness levels")
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("-o", "--output", required=True)
        q.add_argument("-w", "--witness")
        q.add_argument("--report")

    q = sub.add_parser("gr", help="transition digraph of a map over a partition")
    q.add_argument("-f", "--map", required=True)
    q.add_argument("-p", "--partition", required=True, help="partition or witness file")
    q.add_argument("--level", type=int, default=1, help="witness level when -p is a witness file")
    q.add_argument("--dot")
    q.add_argument("-o", "--output")

    q = sub.add_parser("approx", help="approximate a map by dumbbells or balloons")
    q.add_argument("-f", "--map", required=True)
    q.add_argument("--eps", type=_rat, required=True)
    q.add_argument("--kind", choices=("dumbbell", "balloon"), default="dumbbell")
    q.add_argument("--partition", choices=("join", "uniform"), default="join")
    q.add_argument("-o", "--output", required=True)
    q.add_argument("-p", "--partition-out")
    q.add_argument("--report")

    q = sub.add_parser("conjugate", help="back-and-forth conjugator between two generic maps")
    q.add_argument("f")
    q.add_argument("g")
    q.add_argument("--witnesses", nargs=2, required=True, metavar=("WF", "WG"))
    q.add_argument("--stages", type=int, required=True)
    q.add_argument("-o", "--output", required=True)
    q.add_argument("--report")
    q.add_argument("--schedule")

    q = sub.add_parser("analyze", help="checks and dynamical certificates")
    q.add_argument("what", choices=("check-p", "check-q", "shadow", "liyorke", "omega", "recurrence",
                                    "chain", "defect"))
    q.add_argument("-f", "--map", required=True)
    q.add_argument("-w", "--witness", required=True)
    q.add_argument("--level", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--x", type=_point)
    q.add_argument("--y", type=_point)
    q.add_argument("--eps", type=_rat)
    q.add_argument("--delta", type=_rat)
    q.add_argument("--pseudo", help="pseudo-orbit JSON")
    q.add_argument("--length", type=int, help="pseudo-orbit length (100) or chain length (50)")
    q.add_argument("--pairs", type=int, default=10)
    q.add_argument("--horizon", type=int, default=500)
    q.add_argument("--samples", type=int, default=5)
    q.add_argument("--stages", type=int)
    q.add_argument("--period-bound", type=int)
    q.add_argument("--chains", type=int, default=100)
    q.add_argument("--component", type=int, default=0)
    q.add_argument("--N", type=int, default=3)
    q.add_argument("-o", "--output")
    return p


COMMANDS = {"gen-hom": cmd_gen, "gen-cont": cmd_gen, "gr": cmd_gr, "approx": cmd_approx,
            "conjugate": cmd_conjugate, "analyze": _analyze}


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc),
                                           "exit_code": code}}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        if ns.command is None:
            raise UsageError("a command is required")
        if ns.depth_cap is not None:
            set_depth_cap(ns.depth_cap)
        if ns.command == "analyze" and ns.what == "chain" and ns.eps is None:
            raise UsageError("chain needs --eps")
        args = {k: v for k, v in vars(ns).items() if k not in ("command", "depth_cap")}
        return COMMANDS[ns.command](RunConfig(ns.command, args))
    except ContractViolation as exc:
        return _fail(EXIT_CONTRACT, exc)
    except DepthOverflow as exc:
        return _fail(EXIT_DEPTH, exc)
    except (UsageError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        return _fail(EXIT_USER, exc)


if __name__ == "__main__":
    sys.exit(main())
