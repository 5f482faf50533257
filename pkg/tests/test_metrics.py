import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance
from ssp_qaoa.classical import feasible_optimum
from ssp_qaoa.encode import Assignment, normalize, objective_value
from ssp_qaoa.errors import UndefinedRatioError
from ssp_qaoa.metrics import (ComparisonRow, KpiReport, aggregate_table, aggregate_to_tsv,
                              approximation_ratio, average_best, compare, format_average_best,
                              greedy_baseline, kpis, relative_kpis, rows_to_tsv, scatter_to_tsv,
                              scs)


def _three_gaps(build, w01=0.0, w02=0.0, w12=0.0):
    seqs = [{"gap": g, "value": 1, "duration": 1, "ships": [f"s{g}"], "dist": 10.0 * (g + 1)}
            for g in range(3)]
    flow = np.zeros((3, 3))
    flow[0, 1], flow[0, 2], flow[1, 2] = w01, w02, w12
    dist = np.ones((3, 3)) - np.eye(3)
    return build([5, 5, 5], seqs, flow, dist)


def test_scs_examples(build):
    inst = _three_gaps(build, w01=0.4, w02=0.2, w12=0.3)
    _, w, norm = normalize(inst)
    a, b, c = w[(0, 1)], w[(0, 2)], w[(1, 2)]
    assert scs(inst, Assignment((1, 1, 0))) == pytest.approx(a / 4, abs=1e-12)
    assert scs(inst, Assignment((0, 1, 0))) == 0.0
    assert scs(inst, Assignment((0, 0, 0))) == 0.0
    assert scs(inst, Assignment((1, 1, 1))) == pytest.approx((a + b + c) / 9, abs=1e-12)


def test_scs_on_unit_normalization(build):
    # values sum to 99.6 and w = 0.4, so the normalization factor is exactly 1
    seqs = [{"gap": 0, "value": 49.8, "duration": 1, "ships": ["a"]},
            {"gap": 1, "value": 49.8, "duration": 1, "ships": ["b"]}]
    inst = build([5, 5], seqs, [[0, 0.4], [0, 0]], [[0, 1], [1, 0]])
    assert normalize(inst)[2] == pytest.approx(1.0)
    assert scs(inst, Assignment((1, 1))) == pytest.approx(0.1, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_pair_sum_equals_k_squared_scs(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 4, 2, lambda_q=2.0)
    a = Assignment(tuple(int(b) for b in rng.integers(0, 2, inst.n)))
    v, w, _ = normalize(inst)
    sel = set(a.indices)
    pair_sum = sum(val for (i, j), val in w.items() if i in sel and j in sel)
    k = len(sel)
    assert pair_sum == pytest.approx(k * k * scs(inst, a), abs=1e-9)
    assert objective_value(inst, a) == pytest.approx(sum(v[i] for i in sel) + pair_sum, abs=1e-9)


def test_scs_invariant_under_relabeling(build):
    inst = _three_gaps(build, w01=0.4, w02=0.2, w12=0.3)
    seqs = [{"gap": g, "value": 1, "duration": 1, "ships": [f"s{g}"]} for g in range(3)]
    flow = np.zeros((3, 3))
    flow[0, 1], flow[0, 2], flow[1, 2] = 0.4, 0.2, 0.3
    # same problem with the sequences stored in reverse order
    rev = build([5, 5, 5], seqs[::-1], flow[::-1, ::-1].T, np.ones((3, 3)) - np.eye(3))
    for bits in [(1, 1, 0), (1, 0, 1), (1, 1, 1)]:
        assert scs(inst, Assignment(bits)) == pytest.approx(scs(rev, Assignment(bits)), abs=1e-12)


def test_kpi_examples(build):
    inst = build([5, 5], [{"gap": 0, "value": 1, "duration": 1, "ships": ["a", "b", "c"], "dist": 120},
                          {"gap": 1, "value": 1, "duration": 1, "ships": ["c", "d"], "dist": 30}])
    empty = kpis(inst, Assignment((0, 0)))
    assert (empty.sd, empty.tdd, empty.scs, empty.feasible, empty.tdd_per_sd) == (0, 0.0, 0.0, True, None)
    one = kpis(inst, Assignment((1, 0)))
    assert (one.sd, one.tdd, one.tdd_per_sd) == (3, 120.0, 40.0)
    both = kpis(inst, Assignment((1, 1)))
    assert both.sd == 4 and both.tdd == 150.0 and not both.feasible


def test_approximation_ratio():
    assert approximation_ratio(-100.0, -100.0) == 1.0
    assert approximation_ratio(-90.0, -100.0) == 0.9
    with pytest.raises(UndefinedRatioError):
        approximation_ratio(-1.0, 0.0)
    with pytest.raises(UndefinedRatioError):
        approximation_ratio(-1.0, 3.0)


def test_greedy_examples(build):
    one = build([5], [{"gap": 0, "value": 4, "duration": 1, "ships": ["a"]},
                      {"gap": 0, "value": 9, "duration": 6, "ships": ["b"]},
                      {"gap": 0, "value": 6, "duration": 2, "ships": ["c"]}])
    assert greedy_baseline(one).bits == (0, 0, 1)
    shared = build([5, 5], [{"gap": 0, "value": 9, "duration": 1, "ships": ["s"]},
                            {"gap": 1, "value": 8, "duration": 1, "ships": ["s"]},
                            {"gap": 1, "value": 2, "duration": 1, "ships": ["t"]}])
    assert greedy_baseline(shared).bits == (1, 0, 1)


def test_greedy_misses_interaction_heavy_optimum(build):
    seqs = [{"gap": 0, "value": 10, "duration": 1, "ships": ["a"]},
            {"gap": 0, "value": 9, "duration": 1, "ships": ["b"]},
            {"gap": 1, "value": 10, "duration": 1, "ships": ["c"]},
            {"gap": 1, "value": 9, "duration": 1, "ships": ["d"]}]
    flow = np.zeros((4, 4))
    flow[1, 3] = 1.0
    inst = build([5, 5], seqs, flow, [[0, 1], [1, 0]], lambda_q=20.0)
    g = greedy_baseline(inst)
    fo = feasible_optimum(inst)
    assert g.bits == (1, 0, 1, 0) and fo.assignment.bits == (0, 1, 0, 1)
    assert objective_value(inst, g) < fo.objective


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_greedy_never_beats_feasible_optimum(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 4, 3, lambda_q=float(rng.uniform(0, 20)))
    g = greedy_baseline(inst)
    assert kpis(inst, g).feasible
    assert objective_value(inst, g) <= feasible_optimum(inst).objective + 1e-9
    assert greedy_baseline(inst) == g


def test_compare_rows(build):
    inst = _three_gaps(build, w01=0.4)
    oracle = feasible_optimum(inst)
    rows = compare(inst, {"oracle": oracle.assignment, "quantum_raw": Assignment((0, 0, 0))},
                   oracle, "s1")
    by = {r.source: r for r in rows}
    assert by["oracle"].ar == 1.0
    assert by["oracle"].kpis.objective == max(r.kpis.objective for r in rows)
    assert by["quantum_raw"].kpis.sd == 0
    assert all(r.ar <= 1 + 1e-9 for r in rows)
    tsv = rows_to_tsv(rows).splitlines()
    assert len(tsv) == 3 and tsv[0].startswith("scenario\tsource")


def test_compare_with_nonnegative_oracle_gives_nan(build):
    inst = _three_gaps(build)
    zero = feasible_optimum(inst)
    fake = type(zero)(Assignment((0, 0, 0)), 0.0, 0.0, zero.method)
    rows = compare(inst, {"greedy_baseline": Assignment((1, 0, 0))}, fake)
    assert math.isnan(rows[0].ar)


def test_average_best():
    assert average_best([1.0, 1.05, 0.95]) == pytest.approx((1.0, 1.05))
    assert average_best([3.0, -2.0], higher_is_better=False) == (0.5, -2.0)
    assert format_average_best([1.0, 1.05, 0.95]) == "+1.00 (+1.05)"


def _row(scen, source, sd, scs_, tdd):
    k = KpiReport(sd, scs_, tdd, tdd / sd if sd else None, 0.0, True)
    return ComparisonRow(scen, source, k, 1.0, -1.0)


def test_aggregate_three_scenarios():
    rows = []
    for scen, sd_q in (("a", 20), ("b", 21), ("c", 19)):
        rows.append(_row(scen, "greedy_baseline", 20, 0.10, 100.0))
        rows.append(_row(scen, "quantum_refined", sd_q, 0.12, 90.0))
    ratios = [relative_kpis(q, b)["sd_ratio"] for b, q in zip(rows[::2], rows[1::2])]
    assert ratios == pytest.approx([1.0, 1.05, 0.95])
    mean, best = average_best(ratios)
    assert mean == pytest.approx(1.0) and best == pytest.approx(1.05)
    (entry,) = aggregate_table(rows)
    assert entry["source"] == "quantum_refined" and entry["scenarios"] == 3
    assert entry["sd_pct"] == "+0.00 (+5.00)"
    assert entry["delta_scs"] == "+0.02 (+0.02)"
    assert entry["tdd_pct"] == "-10.00 (-10.00)"
    assert aggregate_to_tsv([entry]).splitlines()[1].startswith("quantum_refined\t3\t")
    scatter = scatter_to_tsv(rows).splitlines()
    assert len(scatter) == 4 and scatter[2].split("\t")[2] == "1.05"
