"""Build a small scenario, encode it and check the encodings agree.

Run: python3 demos/01_encode_and_check.py
"""
import itertools

import numpy as np

from ssp_qaoa.classical import exhaustive_ground_state, feasible_optimum
from ssp_qaoa.encode import (build_qubo, check_constraints, ising_energy, objective_value, prune,
                             qubo_energy, qubo_to_ising)
from ssp_qaoa.instance import ScenarioConfig, describe, sample_instances

# a desk-sized scenario: five cancellations, about two and a half sequences each
inst = sample_instances(ScenarioConfig(cancellations=5, sequences_per_gap_mean=2.5), 1, 10, 12)[0]
print("scenario:", describe(inst))
for k, (gap, seq) in enumerate(inst.variables):
    s = inst.sequence_at(k)
    print(f"  x{k:<2d} gap={gap:<4s} seq={seq:<6s} value={s.value:6.1f} duration={s.duration:4.1f}")

qubo = build_qubo(inst)
ham = qubo_to_ising(qubo)
print(f"\nQUBO: {len(qubo.quadratic)} couplings, Ising offset {ham.e0:.3f}")

# every bitstring: Ising and QUBO energies coincide, and on exclusivity-feasible
# points the energy is minus the objective
xs = np.array(list(itertools.product([0, 1], repeat=inst.n)), dtype=float)
eq, ei = qubo_energy(qubo, xs), ising_energy(ham, xs)
print("max |ising - qubo| over all strings:", float(np.abs(eq - ei).max()))
feas = np.array([check_constraints(inst, x).exclusivity_feasible for x in xs])
obj = np.array([objective_value(inst, x) for x in xs[feas]])
print(f"{feas.sum()} exclusivity-feasible strings, max |qubo + objective| =",
      float(np.abs(eq[feas] + obj).max()))

# the circuit keeps only the strongest couplings
for p in (1, 3, 5):
    pr = prune(ham, p)
    print(f"p={p}: keep {len(pr.kept_pairs)} of {len(ham.j)} couplings (budget {pr.budget})")

ground = exhaustive_ground_state(ham, inst)
best = feasible_optimum(inst)
print("\npenalized ground state :", ground.assignment.to_string(), f"{ground.energy:.4f}")
print("best feasible selection:", best.assignment.to_string(), f"{best.energy:.4f}")
