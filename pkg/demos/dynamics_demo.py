"""Dynamical certificates for a generic homeomorphism."""
import random

from cantordyn.core import Point
from cantordyn.dynamics import li_yorke_exclusion, omega_covers, recurrence_report
from cantordyn.generic import generic_hom

h, ws = generic_hom(2, seed=5)
rng = random.Random(0)


def pt() -> Point:
    return Point("".join(rng.choice("01") for _ in range(12)), "0")


x = pt()
oc = omega_covers(h, ws, x)
print("omega-limit cover sizes:", [len(c) for c in oc.covers], "settles after", oc.settle)

verdicts = [li_yorke_exclusion(h, ws[-1], pt(), pt(), 300).verdict for _ in range(20)]
print("Li-Yorke verdicts:", {v: verdicts.count(v) for v in set(verdicts)})

rep = recurrence_report(h, ws[0])
print(f"{len(rep.nonrecurrent)} nonrecurrent sets, periodic points up to {rep.periodic_bound}: "
      f"{len(rep.periodic_points)}")
