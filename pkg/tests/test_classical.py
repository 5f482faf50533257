import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import DESK, random_instance
from ssp_qaoa.classical import (ExactResult, RefineConfig, RefineTrace, exhaustive_ground_state,
                                feasible_optimum, refine, refine_candidates, repair)
from ssp_qaoa.encode import (Assignment, QuboModel, build_qubo, check_constraints,
                             evaluate_energy, objective_value, qubo_to_ising)
from ssp_qaoa.errors import ResourceError
from ssp_qaoa.instance import sample_instances
from ssp_qaoa.iterqaoa import QaoaConfig, run


def brute_feasible_best(inst):
    """Best objective over all fully feasible bitstrings, by enumeration."""
    best = -np.inf
    for bits in itertools.product([0, 1], repeat=inst.n):
        if check_constraints(inst, bits).feasible:
            best = max(best, objective_value(inst, bits))
    return best


# -- exhaustive ground state -------------------------------------------------------

def test_single_variable_ground_state(build):
    inst = build([5], [{"gap": 0, "value": 9, "duration": 1, "ships": ["a"]}])
    res = exhaustive_ground_state(None, inst)
    assert res.assignment.bits == (1,)
    assert res.energy == pytest.approx(-100.0, abs=1e-9)
    assert res.method == "exhaustive_bitstrings"


def test_weak_penalty_ground_state_breaks_exclusivity(build):
    inst = build([5], [{"gap": 0, "value": 50.25, "duration": 1, "ships": ["a"]},
                       {"gap": 0, "value": 49.75, "duration": 1, "ships": ["b"]}])
    res = exhaustive_ground_state(None, inst, 10.0)
    assert res.assignment.bits == (1, 1)
    assert res.energy == pytest.approx(-90.0, abs=1e-9)


def test_penalty_only_ground_state_is_empty(build):
    inst = build([5, 5], [{"gap": 0, "value": 1, "duration": 1, "ships": ["a"]},
                          {"gap": 1, "value": 1, "duration": 1, "ships": ["a"]}])
    ham = qubo_to_ising(QuboModel(2, np.zeros(2), {(0, 1): 10.0}))
    res = exhaustive_ground_state(ham, inst)
    # 00, 10 and 01 tie at zero; the lexicographically smallest string wins
    assert res.assignment.to_string() == "00"


def test_exhaustive_cap(build):
    seqs = [{"gap": k, "value": 1, "duration": 1, "ships": [f"s{k}"]} for k in range(23)]
    with pytest.raises(ResourceError):
        exhaustive_ground_state(None, build([5] * 23, seqs))


# -- feasible optimum --------------------------------------------------------------

def test_feasible_optimum_examples(build):
    one = build([5], [{"gap": 0, "value": 3, "duration": 2, "ships": ["a"]}])
    assert feasible_optimum(one).assignment.bits == (1,)
    too_long = build([5], [{"gap": 0, "value": 3, "duration": 6, "ships": ["a"]}])
    assert feasible_optimum(too_long).assignment.bits == (0,)
    shared = build([5, 5], [{"gap": 0, "value": 60, "duration": 1, "ships": ["s"]},
                            {"gap": 1, "value": 40, "duration": 1, "ships": ["s"]}])
    res = feasible_optimum(shared)
    assert res.assignment.bits == (1, 0)
    assert res.method == "per_gap_enumeration"
    assert res.objective == pytest.approx(60.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_feasible_optimum_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(1, 5)), int(rng.integers(1, 4)), lambda_q=5.0)
    res = feasible_optimum(inst)
    assert check_constraints(inst, res.assignment).feasible
    assert res.objective == pytest.approx(brute_feasible_best(inst), abs=1e-9)
    ham = qubo_to_ising(build_qubo(inst))
    assert res.energy == pytest.approx(-res.objective, abs=1e-9)
    assert res.energy == pytest.approx(evaluate_energy(ham, inst, res.assignment.array()), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_oracles_agree_when_ground_state_is_feasible(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 4, int(rng.integers(1, 4)), lambda_q=3.0)
    ground = exhaustive_ground_state(None, inst)
    if not check_constraints(inst, ground.assignment).feasible:
        return
    fo = feasible_optimum(inst)
    assert fo.assignment == ground.assignment
    assert fo.objective == pytest.approx(ground.objective, abs=1e-9)


def test_enumeration_cap(build):
    seqs = [{"gap": g, "value": 1, "duration": 1, "ships": [f"s{g}-{k}"]}
            for g in range(9) for k in range(6)]
    with pytest.raises(ResourceError):
        feasible_optimum(build([5] * 9, seqs))


# -- refinement --------------------------------------------------------------------

def test_refine_adds_single_improving_sequence(build):
    inst = build([5], [{"gap": 0, "value": 3, "duration": 2, "ships": ["a"]}])
    assert refine(inst, Assignment((0,))).bits == (1,)


def test_refine_keeps_an_optimal_start(desk_instances):
    for inst in desk_instances[:5]:
        fo = feasible_optimum(inst)
        trace = RefineTrace()
        out = refine(inst, fo.assignment, trace=trace)
        assert out == fo.assignment
        assert len(trace.trajectories) == 1


def test_refine_never_adds_an_overloading_sequence(build):
    inst = build([5], [{"gap": 0, "value": 9, "duration": 6, "ships": ["a"]},
                       {"gap": 0, "value": 1, "duration": 2, "ships": ["b"]}])
    assert refine(inst, Assignment((0, 0))).bits == (0, 1)
    # an overloaded start is repaired first
    assert refine(inst, Assignment((1, 0))).bits == (0, 1)


def test_repair_drops_lower_value_conflicts(build):
    inst = build([5, 5], [{"gap": 0, "value": 5, "duration": 1, "ships": ["s"]},
                          {"gap": 0, "value": 7, "duration": 1, "ships": ["t"]},
                          {"gap": 1, "value": 6, "duration": 1, "ships": ["t"]}])
    assert repair(inst, Assignment((1, 1, 1))).bits == (0, 1, 0)


def _replay(inst, initial, trace):
    """Re-apply each trajectory's moves and check the recorded deltas and tabu rule."""
    start = set(repair(inst, initial).indices)
    for moves, best_score in zip(trace.trajectories, trace.scores):
        cur = set(start)
        obj = objective_value(inst, Assignment.from_indices(inst.n, cur))
        seen_vars = set()
        history = [(obj, frozenset(cur))]
        for action, k, delta in moves:
            assert k not in seen_vars
            seen_vars.add(k)
            assert action == ("remove" if k in cur else "add")
            cur.symmetric_difference_update({k})
            a = Assignment.from_indices(inst.n, cur)
            assert check_constraints(inst, a).feasible
            new = objective_value(inst, a)
            assert new - obj == pytest.approx(delta, abs=1e-9)
            obj = new
            history.append((obj, frozenset(cur)))
        top = max(h[0] for h in history)
        assert best_score == pytest.approx(top, abs=1e-9)
        start_obj = objective_value(inst, Assignment.from_indices(inst.n, start))
        if top > start_obj + 1e-12:
            start = set(max(history, key=lambda h: h[0])[1])
    return start


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), randomize=st.booleans())
def test_refine_properties(seed, randomize):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(2, 5)), int(rng.integers(1, 4)), lambda_q=4.0)
    initial = Assignment(tuple(int(b) for b in rng.integers(0, 2, inst.n)))
    cfg = RefineConfig(t_max=10, randomize_top2=randomize, seed=seed)
    trace = RefineTrace()
    out = refine(inst, initial, cfg, trace)
    assert check_constraints(inst, out).feasible
    start = repair(inst, initial)
    assert objective_value(inst, out) >= objective_value(inst, start) - 1e-12
    if check_constraints(inst, initial).feasible:
        assert start == initial
    scores = trace.scores
    assert 1 <= len(scores) <= 10
    assert set(_replay(inst, initial, trace)) == set(out.indices)
    assert refine(inst, initial, cfg) == out


def test_refine_config_validation():
    with pytest.raises(ValueError):
        RefineConfig(t_max=0)


def test_refine_candidates_unique_and_sorted(desk_instances):
    inst = desk_instances[2]
    rng = np.random.default_rng(0)
    bits = ["".join(map(str, rng.integers(0, 2, inst.n))) for _ in range(40)]
    out = refine_candidates(inst, bits)
    assert 1 <= len(out) <= 10
    energies = [e for _, e in out]
    assert energies == sorted(energies)
    assert len({a.bits for a, _ in out}) == len(out)
    assert all(check_constraints(inst, a).feasible for a, _ in out)


@pytest.mark.slow
def test_refined_quantum_candidates_reach_feasible_optimum():
    insts = sample_instances(DESK, 100, 10, 10)
    hits = 0
    for i, inst in enumerate(insts):
        best = run(inst, QaoaConfig(seed=i)).best[0]
        out = refine(inst, Assignment.from_string(best))
        hits += abs(objective_value(inst, out) - feasible_optimum(inst).objective) <= 1e-9
    assert hits >= 90


def test_exact_result_is_frozen(build):
    inst = build([5], [{"gap": 0, "value": 3, "duration": 2, "ships": ["a"]}])
    res = feasible_optimum(inst)
    assert isinstance(res, ExactResult)
    with pytest.raises(AttributeError):
        res.objective = 0.0
