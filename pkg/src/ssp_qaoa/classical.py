"""Exact reference solvers and the add/remove refinement heuristic."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .encode import (DEFAULT_LAMBDA, Assignment, IsingHamiltonian, build_qubo, energy_table,
                     evaluate_energy, index_to_string, normalized_arrays, objective_value,
                     qubo_to_ising)
from .errors import ResourceError
from .instance import SspInstance

EXHAUSTIVE_MAX_N = 22
ENUMERATION_MAX_LEAVES = 10 ** 7
TIE_TOL = 1e-9


@dataclass(frozen=True)
class ExactResult:
    assignment: Assignment
    objective: float
    energy: float
    method: str  # "exhaustive_bitstrings" | "per_gap_enumeration"


def _tol(e: float) -> float:
    return TIE_TOL * max(1.0, abs(e))


def exhaustive_ground_state(hamiltonian: IsingHamiltonian | None, instance: SspInstance,
                            lam: float = DEFAULT_LAMBDA) -> ExactResult:
    """Minimum of the full energy (capacity penalty included) over all bitstrings.

    Ties within a relative 1e-9 go to the lexicographically smallest bitstring.
    """
    n = instance.n
    if n > EXHAUSTIVE_MAX_N:
        raise ResourceError(f"exhaustive search limited to n <= {EXHAUSTIVE_MAX_N}, got n={n}")
    if hamiltonian is None:
        hamiltonian = qubo_to_ising(build_qubo(instance, lam))
    table = energy_table(hamiltonian, instance, lam)
    emin = float(table.min())
    ties = np.flatnonzero(table <= emin + _tol(emin))
    best = min(index_to_string(int(i), n) for i in ties)
    a = Assignment.from_string(best)
    energy = float(evaluate_energy(hamiltonian, instance, a.array(), lam))
    return ExactResult(a, objective_value(instance, a), energy, "exhaustive_bitstrings")


def feasible_optimum(instance: SspInstance, lam: float = DEFAULT_LAMBDA) -> ExactResult:
    """Best assignment satisfying capacity, shipment and gap constraints.

    Depth-first enumeration of at most one sequence per gap; branches that
    reuse a shipment or overload a gap are cut.
    """
    n = instance.n
    gaps = [np.flatnonzero(instance.gap_of == g).tolist() for g in range(len(instance.gap_ids))]
    leaves = math.prod(len(v) + 1 for v in gaps)
    if leaves > ENUMERATION_MAX_LEAVES:
        raise ResourceError(
            f"per-gap enumeration would visit {leaves} leaves (limit {ENUMERATION_MAX_LEAVES})")
    if n == 0:
        a = Assignment(())
        return ExactResult(a, 0.0, 0.0, "per_gap_enumeration")

    v, w, _ = normalized_arrays(instance)
    fits = instance.durations <= instance.capacities[instance.gap_of]
    ships = [instance.sequence_at(k).shipments for k in range(n)]
    v_list = v.tolist()
    w_rows = w.tolist()

    best_val = -math.inf
    best_sets: list = []
    chosen: list = []
    used: set = set()

    def visit(gi: int, val: float):
        nonlocal best_val, best_sets
        if gi == len(gaps):
            if val > best_val + _tol(best_val if best_val > -math.inf else 0.0):
                best_val = val
                best_sets = [tuple(chosen)]
            elif val >= best_val - _tol(best_val):
                best_sets.append(tuple(chosen))
            return
        visit(gi + 1, val)
        for k in gaps[gi]:
            if not fits[k] or used & ships[k]:
                continue
            gain = v_list[k] + sum(w_rows[k][c] for c in chosen)
            chosen.append(k)
            used.update(ships[k])
            visit(gi + 1, val + gain)
            used.difference_update(ships[k])
            chosen.pop()

    visit(0, 0.0)
    # recompute exactly to compare candidates on one arithmetic path
    cands = [Assignment.from_indices(n, s) for s in best_sets]
    objs = [objective_value(instance, a) for a in cands]
    top = max(objs)
    pick = min((a.to_string() for a, o in zip(cands, objs) if o >= top - _tol(top)))
    a = Assignment.from_string(pick)
    ham = qubo_to_ising(build_qubo(instance, lam))
    energy = float(evaluate_energy(ham, instance, a.array(), lam))
    return ExactResult(a, objective_value(instance, a), energy, "per_gap_enumeration")


# -- refinement --------------------------------------------------------------

@dataclass(frozen=True)
class RefineConfig:
    t_max: int = 10
    randomize_top2: bool = False
    seed: int = 0
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")


@dataclass
class RefineTrace:
    """Per trajectory: list of ``(action, variable, delta)``."""

    trajectories: list = field(default_factory=list)
    scores: list = field(default_factory=list)


class _State:
    """Incremental bookkeeping of a working selection."""

    def __init__(self, instance: SspInstance, selected, lam: float):
        self.v, self.w, _ = normalized_arrays(instance)
        self.gap = instance.gap_of
        self.dur = instance.durations
        self.cap = instance.capacities
        self.ships = [instance.sequence_at(k).shipments for k in range(instance.n)]
        self.lam = lam
        self.selected = set(selected)
        self.gap_load = np.zeros(len(self.cap))
        self.gap_count = np.zeros(len(self.cap), dtype=int)
        self.ship_use: dict = {}
        self.inter = np.zeros(instance.n)  # sum of w' to selected variables
        for k in self.selected:
            self._book(k, +1)

    def _cap_pen(self, g: int, load: float) -> float:
        return self.lam * math.erf(max(0.0, load - self.cap[g]))

    def _book(self, k: int, sign: int):
        g = self.gap[k]
        self.gap_load[g] += sign * self.dur[k]
        self.gap_count[g] += sign
        for s in self.ships[k]:
            self.ship_use[s] = self.ship_use.get(s, 0) + sign
        self.inter += sign * self.w[k]

    def valid(self, k: int) -> bool:
        if k in self.selected:
            return True
        g = self.gap[k]
        if self.gap_count[g] > 0 or self.gap_load[g] + self.dur[k] > self.cap[g]:
            return False
        return all(self.ship_use.get(s, 0) == 0 for s in self.ships[k])

    def delta(self, k: int) -> float:
        g = self.gap[k]
        load = self.gap_load[g]
        if k in self.selected:
            new = load - self.dur[k]
            return -(self.v[k] + self.inter[k]) - (self._cap_pen(g, new) - self._cap_pen(g, load))
        new = load + self.dur[k]
        return self.v[k] + self.inter[k] - (self._cap_pen(g, new) - self._cap_pen(g, load))

    def apply(self, k: int):
        if k in self.selected:
            self.selected.remove(k)
            self._book(k, -1)
        else:
            self.selected.add(k)
            self._book(k, +1)


def score(instance: SspInstance, assignment, lam: float = DEFAULT_LAMBDA) -> float:
    """Objective minus the soft capacity penalty (``-energy`` on exclusivity-feasible points).

    Refinement only visits feasible points, where this is the plain objective."""
    x = assignment.array() if isinstance(assignment, Assignment) else np.asarray(assignment, float)
    t = np.zeros((instance.n, len(instance.gap_ids)))
    t[np.arange(instance.n), instance.gap_of] = instance.durations
    over = np.maximum(0.0, x @ t - instance.capacities)
    return objective_value(instance, x) - lam * float(erf(over).sum())


def repair(instance: SspInstance, assignment: Assignment) -> Assignment:
    """Drop overloading selections and those that break shipment/gap exclusivity,
    keeping higher values first."""
    v = instance.values
    keep: list = []
    used: set = set()
    gaps_used: set = set()
    for k in sorted(assignment.indices, key=lambda k: (-v[k], k)):
        seq = instance.sequence_at(k)
        g = instance.gap_of[k]
        if g in gaps_used or used & seq.shipments or seq.duration > instance.capacities[g]:
            continue
        keep.append(k)
        used |= seq.shipments
        gaps_used.add(g)
    return Assignment.from_indices(instance.n, keep)


def refine(instance: SspInstance, initial: Assignment, config: RefineConfig | None = None,
           trace: RefineTrace | None = None) -> Assignment:
    """Local search over single add/remove moves with a per-trajectory tabu.

    Each outer iteration starts from the incumbent, greedily applies the best
    valid move (each variable at most once) until none remains, and adopts the
    best assignment seen on the trajectory if it beats the incumbent. Adds that
    would break exclusivity or overload a gap are not valid, so every visited
    point is feasible.
    """
    config = config or RefineConfig()
    rng = np.random.default_rng(config.seed)
    start = repair(instance, initial)
    best = set(start.indices)
    best_score = score(instance, start, config.lam)
    n = instance.n

    for _ in range(config.t_max):
        st = _State(instance, best, config.lam)
        actions = set(range(n))
        cur = best_score
        history = [(cur, frozenset(st.selected))]
        moves = []
        while True:
            ranked = sorted(((st.delta(k), k) for k in actions if st.valid(k)),
                            key=lambda dk: (-dk[0], dk[1]))
            if not ranked:
                break
            d, k = ranked[0]
            if config.randomize_top2 and len(ranked) > 1 and rng.random() < 0.5:
                d, k = ranked[1]
            moves.append(("remove" if k in st.selected else "add", k, d))
            st.apply(k)
            actions.discard(k)
            cur += d
            history.append((cur, frozenset(st.selected)))
        hat_score, hat_set = max(history, key=lambda h: h[0])
        hat_score = score(instance, Assignment.from_indices(n, hat_set), config.lam)
        if trace is not None:
            trace.trajectories.append(moves)
            trace.scores.append(hat_score)
        if hat_score > best_score + 1e-12:
            best, best_score = set(hat_set), hat_score
        else:
            break
    return Assignment.from_indices(n, best)


def refine_candidates(instance: SspInstance, bitstrings, config: RefineConfig | None = None,
                      keep: int = 10) -> list:
    """Refine every candidate and return up to ``keep`` unique results as
    ``(assignment, energy)`` sorted by energy."""
    config = config or RefineConfig()
    ham = qubo_to_ising(build_qubo(instance, config.lam))
    out = {}
    for b in bitstrings:
        a = refine(instance, b if isinstance(b, Assignment) else Assignment.from_string(b), config)
        if a.bits not in out:
            out[a.bits] = (a, float(evaluate_energy(ham, instance, a.array(), config.lam)))
    ranked = sorted(out.values(), key=lambda ae: (ae[1], ae[0].to_string()))
    return ranked[:keep]
