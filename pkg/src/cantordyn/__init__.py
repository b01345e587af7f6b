"""Exact dynamics on the Cantor space: clopen partitions, prefix maps, transition
digraphs, generic maps and their conjugacies, and dynamical certificates."""

from .core import (D_MAX, Clopen, DepthOverflow, Partition, Point, PrefixMap, apply, compose,
                   depth_cap, diam, dist, image, iterate, mesh, min_gap, preimage, refinement_map,
                   set_depth_cap, sup_dist)
from .digraph import ComponentKind, Digraph, GraphMap, build_gr, classify, classify_all, to_dot
from .approx import ContractViolation, ParameterError, approximate, realize
from .generic import (ContWitness, HomWitness, StageOverflow, check_property_P, check_property_Q,
                      generic_cont, generic_hom, q_schedule)
from .conjugacy import (CardinalityError, ConjugacySchedule, ScheduleError, WitnessShortage,
                        back_and_forth_cont, back_and_forth_hom, commutes_check, conjugator)
from .verdict import Verdict

__version__ = "0.1.0"
