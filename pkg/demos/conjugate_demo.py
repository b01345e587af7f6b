"""Conjugate two generic homeomorphisms stage by stage."""
from cantordyn.conjugacy import back_and_forth_hom, conjugator_report
from cantordyn.generic import generic_hom

f, wf = generic_hom(2, seed=1)
g, wg = generic_hom(2, seed=2)
s = back_and_forth_hom(f, wf, g, wg, 2)
rep = conjugator_report(s, f, g)
for st, r in zip(s.stages, rep.residuals):
    print(f"stage {st.direction}: {len(st.P)} cells, residual {r['residual']} <= {r['bound']}")
for c in rep.cauchy:
    print("cauchy", {k: str(v) for k, v in c.items()})
print("last stage map is a homeomorphism:", rep.maps[-1].is_homeomorphism())
