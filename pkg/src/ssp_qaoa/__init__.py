"""Shipment selection with QUBO encodings and Iterative-QAOA statevector simulation."""
from .instance import (Gap, ScenarioConfig, Sequence, Shipment, SspInstance, generate_instance,
                       load_instance, sample_instances, save_instance, variable_index)
from .encode import (Assignment, IsingHamiltonian, PrunedHamiltonian, QuboModel, build_interactions,
                     build_qubo, check_constraints, evaluate_energy, normalize, objective_value,
                     prune, qubo_to_ising)
from .qsim import (SampleSet, Statevector, WarmStartAngles, apply_cost_layer, apply_mixer_layer,
                   exact_expectation, prepare_init, run_circuit, sample)
from .iterqaoa import (QaoaConfig, QuantumResult, beta_schedule, bias_update, boltzmann,
                       lr_schedule, run)
from .classical import (ExactResult, RefineConfig, exhaustive_ground_state, feasible_optimum,
                        refine)
from .metrics import (ComparisonRow, KpiReport, approximation_ratio, compare, greedy_baseline,
                      kpis, scs)

__version__ = "0.1.0"
