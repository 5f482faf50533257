"""Solution KPIs, approximation ratio, the greedy per-gap baseline and
scenario-matched comparison tables."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import ExactResult
from .encode import (DEFAULT_LAMBDA, Assignment, build_qubo, check_constraints, evaluate_energy,
                     normalized_arrays, objective_value, qubo_to_ising)
from .errors import UndefinedRatioError
from .instance import SspInstance

SOURCES = ("quantum_raw", "quantum_refined", "greedy_baseline", "oracle")


@dataclass(frozen=True)
class KpiReport:
    sd: int
    scs: float
    tdd: float
    tdd_per_sd: float | None
    objective: float
    feasible: bool


@dataclass(frozen=True)
class ComparisonRow:
    scenario: str
    source: str
    kpis: KpiReport
    ar: float
    energy: float


def scs(instance: SspInstance, assignment) -> float:
    """Sum of normalized pair weights over selected pairs, divided by k squared."""
    x = assignment.array() if isinstance(assignment, Assignment) else np.asarray(assignment, float)
    k = int(x.sum())
    if k <= 1:
        return 0.0
    _, w, _ = normalized_arrays(instance)
    return float(0.5 * x @ w @ x) / k ** 2


def kpis(instance: SspInstance, assignment: Assignment) -> KpiReport:
    shipments = set()
    for k in assignment.indices:
        shipments |= instance.sequence_at(k).shipments
    sd = len(shipments)
    tdd = float(sum(instance.drive_distances[k] for k in assignment.indices))
    return KpiReport(
        sd=sd,
        scs=scs(instance, assignment) if instance.n else 0.0,
        tdd=tdd,
        tdd_per_sd=tdd / sd if sd > 0 else None,
        objective=objective_value(instance, assignment) if instance.n else 0.0,
        feasible=check_constraints(instance, assignment).feasible,
    )


def approximation_ratio(best_energy: float, oracle_energy: float) -> float:
    if not oracle_energy < 0:
        raise UndefinedRatioError(
            f"approximation ratio needs a negative oracle energy, got {oracle_energy}")
    return best_energy / oracle_energy


def greedy_baseline(instance: SspInstance) -> Assignment:
    """Per gap in canonical order, the highest-value sequence that fits the gap
    and shares no shipment with earlier picks. Interactions are ignored."""
    if instance.n == 0:
        return Assignment(())
    v, _, _ = normalized_arrays(instance)
    used: set = set()
    picks = []
    for g in range(len(instance.gap_ids)):
        members = np.flatnonzero(instance.gap_of == g)
        for k in sorted(members.tolist(), key=lambda k: (-v[k], k)):
            seq = instance.sequence_at(k)
            if seq.duration <= instance.capacities[g] and not used & seq.shipments:
                picks.append(k)
                used |= seq.shipments
                break
    return Assignment.from_indices(instance.n, picks)


def compare(instance: SspInstance, solutions: dict, oracle: ExactResult,
            scenario: str = "", lam: float = DEFAULT_LAMBDA) -> list:
    """One row per solution source; AR is NaN when the oracle energy is not negative."""
    ham = qubo_to_ising(build_qubo(instance, lam))
    rows = []
    for source, a in solutions.items():
        energy = float(evaluate_energy(ham, instance, a.array(), lam))
        try:
            ar = approximation_ratio(energy, oracle.energy)
        except UndefinedRatioError:
            ar = math.nan
        rows.append(ComparisonRow(scenario, source, kpis(instance, a), ar, energy))
    return rows


def average_best(values, higher_is_better: bool = True):
    vals = [float(v) for v in values]
    mean = sum(vals) / len(vals)
    best = max(vals) if higher_is_better else min(vals)
    return mean, best


def format_average_best(values, higher_is_better: bool = True, digits: int = 2) -> str:
    mean, best = average_best(values, higher_is_better)
    return f"{mean:+.{digits}f} ({best:+.{digits}f})"


def relative_kpis(row: ComparisonRow, baseline: ComparisonRow) -> dict:
    """SD, TDD and TDD/SD as % change vs. the baseline; SCS as absolute change."""

    def pct(a, b):
        if a is None or b is None or b == 0:
            return math.nan
        return 100.0 * (a - b) / b

    return {
        "sd_ratio": row.kpis.sd / baseline.kpis.sd if baseline.kpis.sd else math.nan,
        "sd_pct": pct(row.kpis.sd, baseline.kpis.sd),
        "delta_scs": row.kpis.scs - baseline.kpis.scs,
        "tdd_pct": pct(row.kpis.tdd, baseline.kpis.tdd),
        "tdd_per_sd_pct": pct(row.kpis.tdd_per_sd, baseline.kpis.tdd_per_sd),
    }


def aggregate_table(rows: list, baseline_source: str = "greedy_baseline") -> list:
    """Per source (except the baseline): ``average (best)`` over scenarios of
    SD%, dSCS, TDD% and TDD/SD%, each relative to the same-scenario baseline."""
    by_scen: dict = {}
    for r in rows:
        by_scen.setdefault(r.scenario, {})[r.source] = r
    per_source: dict = {}
    for scen, srcs in by_scen.items():
        base = srcs.get(baseline_source)
        if base is None:
            continue
        for source, r in srcs.items():
            if source == baseline_source:
                continue
            per_source.setdefault(source, []).append(relative_kpis(r, base))
    out = []
    for source, rel in per_source.items():
        entry = {"source": source, "scenarios": len(rel)}
        for key, better_high in (("sd_pct", True), ("delta_scs", True),
                                 ("tdd_pct", False), ("tdd_per_sd_pct", False)):
            vals = [d[key] for d in rel if not math.isnan(d[key])]
            entry[key] = format_average_best(vals, better_high) if vals else "nan"
        out.append(entry)
    return out


def scatter_to_tsv(rows: list, baseline_source: str = "greedy_baseline") -> str:
    """Per (scenario, source) SD ratio and SCS difference against the baseline."""
    base = {r.scenario: r for r in rows if r.source == baseline_source}
    lines = ["scenario\tsource\tsd_ratio\tdelta_scs"]
    for r in rows:
        b = base.get(r.scenario)
        if b is None or r.source == baseline_source:
            continue
        rel = relative_kpis(r, b)
        lines.append(f"{r.scenario}\t{r.source}\t{rel['sd_ratio']!r}\t{rel['delta_scs']!r}")
    return "\n".join(lines) + "\n"


def rows_to_tsv(rows: list) -> str:
    head = ["scenario", "source", "sd", "scs", "tdd", "tdd_per_sd", "objective", "feasible",
            "energy", "ar"]
    lines = ["\t".join(head)]
    for r in rows:
        k = r.kpis
        lines.append("\t".join([
            r.scenario, r.source, str(k.sd), repr(k.scs), repr(k.tdd),
            "" if k.tdd_per_sd is None else repr(k.tdd_per_sd), repr(k.objective),
            str(k.feasible).lower(), repr(r.energy), repr(r.ar),
        ]))
    return "\n".join(lines) + "\n"


def aggregate_to_tsv(table: list) -> str:
    head = ["source", "scenarios", "sd_pct", "delta_scs", "tdd_pct", "tdd_per_sd_pct"]
    lines = ["\t".join(head)]
    for e in table:
        lines.append("\t".join(str(e[h]) for h in head))
    return "\n".join(lines) + "\n"
