"""
Annealing a nine-atom chain
===========================

Nine atoms 7 um apart form a path graph, since only nearest neighbours sit
inside the blockade radius.  A cubic detuning sweep carries the array from
all-ground into the maximum weighted independent set.
"""

import numpy as np

from rydberg_mwis import (RampParams, RydbergSystem, Schedule, anneal, blockade_radius, brute_force_mwis,
                          chain_layout, evolve, probabilities, udg_from_layout)
from rydberg_mwis.graph import index_to_bitstring
from rydberg_mwis.hamiltonian import C6_MHZ_UM6, OMEGA_MHZ

# The blockade radius sets which pairs count as edges.
print(f"blockade radius: {blockade_radius(C6_MHZ_UM6, OMEGA_MHZ):.2f} um")

# %%
# Two weightings: uniform, and heavier even sites.
for weights in ([1.0] * 9, [1.0, 2.0] * 4 + [1.0]):
    layout = chain_layout(weights)
    graph = udg_from_layout(layout)
    exact = brute_force_mwis(graph)
    print(f"\nweights {weights}")
    print(f"  exact MWIS {exact.optima[0]}  cost {exact.optimal_cost}")

    # 3 us sweep with the zero crossing at mid-sweep.
    schedule = Schedule(RampParams(s=0.0, tau=3.0, delta_min=-10.0, delta_max=10.0))
    system = RydbergSystem(layout)

    # The full final distribution, with no sampling noise.
    p = probabilities(evolve(system, schedule).state)
    top = np.argsort(p)[::-1][:4]
    for i in top:
        print(f"  {index_to_bitstring(int(i), 9)}  {p[i]:.3f}")

    # A 1000-shot experiment, scored with the classical cost.
    record, _ = anneal(system, schedule, graph, shots=1000, seed=0)
    print(f"  sampled argmax {record.argmax()}  <H_MWIS> = {record.estimated_cost:.3f}")
