"""Approximate a random homeomorphism by one made of identical dumbbells."""
import random
from fractions import Fraction

from cantordyn.approx import approximate
from cantordyn.core import sup_dist
from cantordyn.digraph import build_gr, classify_all
from cantordyn.sampling import random_homeomorphism

f = random_homeomorphism(random.Random(11), 4)
print(f"f has {len(f.rules)} rules")
for eps in (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)):
    g, P, rep = approximate(f, eps)
    kinds = {k.describe() for _, k in classify_all(build_gr(g, P))}
    print(f"eps={eps}: {len(P)} cells, sup_dist={sup_dist(f, g)}, components {sorted(kinds)} x {rep['k']}")
