"""Exact energy expectation over the linear-ramp slope and circuit depth.

Starts from the uniform superposition and evaluates the statevector expectation
exactly, no sampling. Larger depth deepens the valley and the minimizing slope
sits well inside the scanned range.

Run: python3 demos/03_landscape_sweep.py
"""
import numpy as np

from ssp_qaoa.encode import build_qubo, energy_table, prune, qubo_to_ising
from ssp_qaoa.instance import ScenarioConfig, sample_instances
from ssp_qaoa.iterqaoa import lr_schedule
from ssp_qaoa.qsim import WarmStartAngles, exact_expectation, prepare_init, run_circuit

inst = sample_instances(ScenarioConfig(cancellations=5, sequences_per_gap_mean=2.5), 1, 15, 15)[0]
ham = qubo_to_ising(build_qubo(inst))
table = energy_table(ham, inst)
theta = WarmStartAngles.uniform(inst.n)
deltas = np.round(np.arange(0.05, 1.0001, 0.05), 2)

print(f"n={inst.n}; uniform-state expectation "
      f"{exact_expectation(prepare_init(theta), ham, inst, table=table):.3f}\n")
print("  p  " + " ".join(f"{d:6.2f}" for d in deltas[::2]))
for p in range(1, 7):
    pruned = prune(ham, p)
    vals = np.array([exact_expectation(run_circuit(pruned, theta, lr_schedule(p, d)), ham, inst,
                                       table=table) for d in deltas])
    k = int(vals.argmin())
    print(f"{p:3d}  " + " ".join(f"{v:6.2f}" for v in vals[::2])
          + f"   argmin delta={deltas[k]:.2f} ({vals[k]:.3f})")
