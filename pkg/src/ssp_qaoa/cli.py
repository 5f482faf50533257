"""Command-line pipeline: generate, encode, solve, refine, sweep, evaluate.

All outputs are UTF-8 text (JSON documents and tab-separated tables) written
atomically. Each command also writes a ``manifest_<command>.json`` that every
artifact it produced names in its ``manifest`` field; the manifest lists its
outputs relative to the output directory.

Exit codes: 0 success, 2 usage, 3 validation/format, 4 resource limits, 5 I/O.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .classical import (ExactResult, RefineConfig, exhaustive_ground_state, feasible_optimum,
                        refine_candidates)
from .encode import (Assignment, build_qubo, check_constraints, energy_table, evaluate_energy,
                     ising_to_json, objective_value, penalty_scale_warning, prune, qubo_to_ising,
                     qubo_to_json)
from .errors import ResourceError, SspError
from .instance import ScenarioConfig, generate_instance, load_instance, save_instance
from .iterqaoa import QaoaConfig, lr_schedule, run
from .metrics import (aggregate_table, aggregate_to_tsv, compare, greedy_baseline, rows_to_tsv,
                      scatter_to_tsv)
from .qsim import WarmStartAngles, check_qubits, exact_expectation, run_circuit

OUT_ENV = "SSP_QAOA_OUT"
EXIT_USAGE, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_IO = 2, 3, 4, 5
KEEP_REFINED = 10


class UsageError(Exception):
    pass


# -- helpers -----------------------------------------------------------------

def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def write_json(path: Path, doc) -> None:
    write_atomic(path, json.dumps(doc, indent=1) + "\n")


def fingerprint(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV, "."))


def merged(args, defaults: dict) -> dict:
    """flags > --config file > defaults, for the keys in ``defaults``."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: line {exc.lineno}: {exc.msg}") from exc
        doc = doc.get("config", doc)
        unknown = set(doc) - set(defaults)
        if unknown:
            raise UsageError(f"{args.config}: unknown keys {sorted(unknown)}")
        cfg.update(doc)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


class Manifest:
    def __init__(self, command: str, config: dict, timings: bool):
        self.doc = {"command": command, "tool_version": __version__, "config": config,
                    "seeds": [], "inputs": [], "outputs": []}
        self.timings = {} if timings else None
        self.name = f"manifest_{command}.json"
        self._t0 = time.perf_counter()

    def time(self, label: str, start: float):
        if self.timings is not None:
            self.timings[label] = time.perf_counter() - start

    def write(self, directory: Path):
        doc = dict(self.doc)
        if self.timings is not None:
            self.timings["total"] = time.perf_counter() - self._t0
            doc["timings_s"] = self.timings
        write_json(directory / self.name, doc)


def parse_range(text: str, cast=float) -> list:
    """``a:b:step`` (inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise UsageError(f"bad range {text!r}")
        lo, hi = cast(parts[0]), cast(parts[1])
        step = cast(parts[2]) if len(parts) == 3 else cast(1)
        if step <= 0 or hi < lo:
            raise UsageError(f"bad range {text!r}")
        count = int(round((hi - lo) / step)) + 1
        return [cast(round(lo + i * step, 12)) for i in range(count)]
    vals = [cast(x) for x in text.split(",") if x.strip()]
    if not vals:
        raise UsageError("empty range")
    return vals


def candidate_doc(instance, ham, lam, a: Assignment, energy=None) -> dict:
    if energy is None:
        energy = float(evaluate_energy(ham, instance, a.array(), lam))
    return {"bits": a.to_string(), "energy": energy,
            "objective": objective_value(instance, a),
            "feasible": check_constraints(instance, a).feasible}


# -- commands ----------------------------------------------------------------

GEN_DEFAULTS = {"num_vehicles": 5, "horizon_days": 5, "cancellations": 11,
                "sequences_per_gap_mean": 6.9, "min_gap_hours": 2.0, "lambda_q": 1.0,
                "seed": 0, "scenarios": 1}


def cmd_generate(args) -> int:
    cfg = merged(args, GEN_DEFAULTS)
    if cfg["scenarios"] < 1:
        raise UsageError("--scenarios must be >= 1")
    out = out_dir(args)
    man = Manifest("generate", cfg, args.timings)
    base = ScenarioConfig(cfg["num_vehicles"], cfg["horizon_days"], cfg["cancellations"],
                          cfg["sequences_per_gap_mean"], cfg["min_gap_hours"], cfg["seed"],
                          cfg["lambda_q"])
    for i in range(cfg["scenarios"]):
        t = time.perf_counter()
        sub = replace(base, seed=cfg["seed"] + i)
        inst = generate_instance(sub)
        inst = replace(inst, meta={**inst.meta, "manifest": man.name})
        path = out / f"instance_seed{sub.seed}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        save_instance(inst, path)
        man.doc["seeds"].append(sub.seed)
        man.doc["outputs"].append(path.name)
        man.time(path.name, t)
    man.write(out)
    return 0


def cmd_encode(args) -> int:
    cfg = merged(args, {"lam": 10.0, "p": None})
    inst = load_instance(args.instance)
    out = out_dir(args)
    man = Manifest("encode", cfg, args.timings)
    qubo = build_qubo(inst, cfg["lam"])
    ham = qubo_to_ising(qubo)
    p = cfg["p"] if cfg["p"] is not None else (5 if inst.n < 50 else 6)
    pruned = prune(ham, p)
    stem = Path(args.instance).stem
    for name, text in ((f"{stem}.qubo.json", qubo_to_json(qubo)),
                       (f"{stem}.ising.json", ising_to_json(ham, pruned))):
        doc = json.loads(text)
        doc["manifest"] = man.name
        doc["instance"] = str(args.instance)
        write_json(out / name, doc)
        man.doc["outputs"].append(name)
    man.doc["inputs"].append(str(args.instance))
    warning = penalty_scale_warning(inst, cfg["lam"])
    if warning:
        man.doc["warnings"] = [warning]
        print(f"warning: {warning}", file=sys.stderr)
    man.write(out)
    return 0


SOLVE_DEFAULTS = {"solver": "quantum", "method": "enumeration", "p": None, "delta": None,
                  "shots": 4000, "n_iter": 20, "top_k": 100, "lam": 10.0, "seed": 0,
                  "refine": False, "t_max": 10, "workers": 1}


def _solve_one(instance_path: str, cfg: dict) -> tuple:
    """Returns ``(solution_doc, log_tsv or None, hist_tsv or None)``."""
    inst = load_instance(instance_path)
    lam = cfg["lam"]
    ham = qubo_to_ising(build_qubo(inst, lam))
    doc = {"instance": str(instance_path), "instance_sha256": fingerprint(instance_path),
           "solver": cfg["solver"], "n": inst.n}
    log = hist = None
    if cfg["solver"] == "quantum":
        check_qubits(inst.n)
        qc = QaoaConfig(cfg["p"], cfg["delta"], cfg["shots"], cfg["n_iter"], cfg["top_k"],
                        lam, seed=cfg["seed"])
        result = run(inst, qc)
        doc["qaoa_config"] = result.config
        doc["candidates"] = [candidate_doc(inst, ham, lam, Assignment.from_string(b), e)
                             for b, e in result.candidates]
        if cfg["refine"]:
            refined = refine_candidates(inst, [b for b, _ in result.candidates],
                                        RefineConfig(t_max=cfg["t_max"], lam=lam), KEEP_REFINED)
            doc["refined"] = [candidate_doc(inst, ham, lam, a, e) for a, e in refined]
        log, hist = _run_log(result)
    elif cfg["solver"] == "exact":
        if cfg["method"] == "exhaustive":
            res = exhaustive_ground_state(ham, inst, lam)
        else:
            res = feasible_optimum(inst, lam)
        doc["method"] = res.method
        doc["candidates"] = [candidate_doc(inst, ham, lam, res.assignment, res.energy)]
    else:
        doc["candidates"] = [candidate_doc(inst, ham, lam, greedy_baseline(inst))]
    return doc, log, hist


def _run_log(result) -> tuple:
    lines = ["iteration\tbeta_t\tbest_energy\tbest_so_far\tmean_energy\tunique_samples"]
    hist = ["iteration\tbin_lo\tbin_hi\tcount"]
    for r in result.records:
        lines.append(f"{r.index}\t{r.beta_t!r}\t{r.best_energy!r}\t{r.best_so_far!r}\t"
                     f"{r.mean_energy!r}\t{r.unique_samples}")
        for lo, hi, c in zip(r.histogram_edges[:-1], r.histogram_edges[1:], r.histogram_counts):
            hist.append(f"{r.index}\t{lo!r}\t{hi!r}\t{c}")
    return "\n".join(lines) + "\n", "\n".join(hist) + "\n"


def cmd_solve(args) -> int:
    cfg = merged(args, SOLVE_DEFAULTS)
    if cfg["solver"] not in ("quantum", "exact", "greedy"):
        raise UsageError(f"unknown solver {cfg['solver']!r}")
    out = out_dir(args)
    man = Manifest("solve", cfg, args.timings)
    paths = [str(p) for p in args.instance]
    man.doc["inputs"] = paths
    man.doc["seeds"] = [cfg["seed"]]
    t = time.perf_counter()
    if cfg["workers"] > 1 and len(paths) > 1:
        with ProcessPoolExecutor(cfg["workers"]) as pool:
            results = list(pool.map(_solve_one, paths, [cfg] * len(paths)))
    else:
        results = [_solve_one(p, cfg) for p in paths]
    man.time("solve", t)
    for path, (doc, log, hist) in zip(paths, results):
        stem = f"{Path(path).stem}.{cfg['solver']}"
        doc["manifest"] = man.name
        write_json(out / f"{stem}.solution.json", doc)
        man.doc["outputs"].append(f"{stem}.solution.json")
        if log is not None:
            write_atomic(out / f"{stem}.log.tsv", log)
            write_atomic(out / f"{stem}.hist.tsv", hist)
            man.doc["outputs"] += [f"{stem}.log.tsv", f"{stem}.hist.tsv"]
    man.write(out)
    return 0


def _load_solution(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SspError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def _solution_instance(sol: dict, sol_path, override=None):
    path = Path(override) if override else Path(sol["instance"])
    if not path.exists() and not override:
        path = Path(sol_path).parent / Path(sol["instance"]).name
    if fingerprint(path) != sol.get("instance_sha256"):
        raise SspError(f"{sol_path}: solution does not reference instance {path}")
    return path, load_instance(path)


def cmd_refine(args) -> int:
    cfg = merged(args, {"lam": 10.0, "t_max": 10, "seed": 0, "randomize_top2": False})
    out = out_dir(args)
    man = Manifest("refine", cfg, args.timings)
    sol = _load_solution(args.solution)
    ipath, inst = _solution_instance(sol, args.solution, args.instance)
    ham = qubo_to_ising(build_qubo(inst, cfg["lam"]))
    rc = RefineConfig(cfg["t_max"], cfg["randomize_top2"], cfg["seed"], cfg["lam"])
    refined = refine_candidates(inst, [c["bits"] for c in sol["candidates"]], rc, KEEP_REFINED)
    sol = dict(sol)
    sol["refined"] = [candidate_doc(inst, ham, cfg["lam"], a, e) for a, e in refined]
    sol["manifest"] = man.name
    name = Path(args.solution).name.replace(".solution.json", ".refined.solution.json")
    write_json(out / name, sol)
    man.doc["inputs"] = [str(args.solution), str(ipath)]
    man.doc["outputs"] = [name]
    man.write(out)
    return 0


def cmd_sweep(args) -> int:
    cfg = merged(args, {"deltas": "0.05:1.0:0.05", "depths": "1:10", "lam": 10.0})
    deltas = parse_range(str(cfg["deltas"]), float)
    depths = parse_range(str(cfg["depths"]), int)
    if any(d < 0 for d in deltas) or any(p < 1 for p in depths):
        raise UsageError("deltas must be >= 0 and depths >= 1")
    inst = load_instance(args.instance)
    check_qubits(inst.n)
    out = out_dir(args)
    man = Manifest("sweep", cfg, args.timings)
    ham = qubo_to_ising(build_qubo(inst, cfg["lam"]))
    table = energy_table(ham, inst, cfg["lam"])
    theta = WarmStartAngles.uniform(inst.n)
    rows = ["p\tdelta\texpectation"]
    grid = {}
    for p in depths:
        pruned = prune(ham, p)
        for d in deltas:
            state = run_circuit(pruned, theta, lr_schedule(p, d))
            e = exact_expectation(state, ham, inst, cfg["lam"], table=table)
            grid[(p, d)] = e
            rows.append(f"{p}\t{d!r}\t{e!r}")
    best = min(grid, key=lambda k: (grid[k], k))
    summary = ["p\targmin_delta\tmin_expectation"]
    for p in depths:
        d = min(deltas, key=lambda d: (grid[(p, d)], d))
        summary.append(f"{p}\t{d!r}\t{grid[(p, d)]!r}")
    summary.append(f"all\t{best[1]!r}\t{grid[best]!r}")
    stem = Path(args.instance).stem
    write_atomic(out / f"{stem}.sweep.tsv", "\n".join(rows) + "\n")
    write_atomic(out / f"{stem}.sweep_argmin.tsv", "\n".join(summary) + "\n")
    man.doc["inputs"] = [str(args.instance)]
    man.doc["outputs"] = [f"{stem}.sweep.tsv", f"{stem}.sweep_argmin.tsv"]
    man.write(out)
    return 0


def cmd_evaluate(args) -> int:
    cfg = merged(args, {"lam": 10.0})
    out = out_dir(args)
    man = Manifest("evaluate", cfg, args.timings)
    by_instance: dict = {}
    for sp in args.solutions:
        sol = _load_solution(sp)
        ipath, inst = _solution_instance(sol, sp, args.instance)
        entry = by_instance.setdefault(str(ipath), {"instance": inst, "solutions": {}})
        src = {"quantum": "quantum_raw", "exact": "oracle", "greedy": "greedy_baseline"}[sol["solver"]]
        entry["solutions"][src] = Assignment.from_string(sol["candidates"][0]["bits"])
        if src == "oracle":
            entry["oracle_method"] = sol.get("method", "per_gap_enumeration")
        if sol.get("refined"):
            entry["solutions"]["quantum_refined"] = Assignment.from_string(sol["refined"][0]["bits"])
        man.doc["inputs"].append(str(sp))
    rows = []
    for ipath, entry in sorted(by_instance.items()):
        inst = entry["instance"]
        sols = entry["solutions"]
        if "oracle" in sols:
            oracle_a = sols["oracle"]
            ham = qubo_to_ising(build_qubo(inst, cfg["lam"]))
            oracle = ExactResult(oracle_a, objective_value(inst, oracle_a),
                                 float(evaluate_energy(ham, inst, oracle_a.array(), cfg["lam"])),
                                 entry["oracle_method"])
        else:
            oracle = feasible_optimum(inst, cfg["lam"])
        order = [s for s in ("quantum_raw", "quantum_refined", "greedy_baseline", "oracle")
                 if s in sols]
        rows += compare(inst, {s: sols[s] for s in order}, oracle, Path(ipath).stem, cfg["lam"])
    write_atomic(out / "comparison.tsv", rows_to_tsv(rows))
    write_atomic(out / "aggregate.tsv", aggregate_to_tsv(aggregate_table(rows)))
    write_atomic(out / "scatter.tsv", scatter_to_tsv(rows))
    man.doc["outputs"] = ["comparison.tsv", "aggregate.tsv", "scatter.tsv"]
    man.write(out)
    return 0


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--config", help="JSON file with option defaults")
    common.add_argument("--timings", action="store_true",
                        help="record wall-clock timings in the manifest")

    ap = argparse.ArgumentParser(prog="ssp-qaoa", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="sample synthetic scenarios")
    g.add_argument("--scenarios", type=int)
    g.add_argument("--vehicles", dest="num_vehicles", type=int)
    g.add_argument("--days", dest="horizon_days", type=int)
    g.add_argument("--cancellations", type=int)
    g.add_argument("--seq-mean", dest="sequences_per_gap_mean", type=float)
    g.add_argument("--min-gap-hours", dest="min_gap_hours", type=float)
    g.add_argument("--lambda-q", dest="lambda_q", type=float)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("encode", parents=[common], help="export QUBO and Ising models")
    e.add_argument("instance")
    e.add_argument("--lam", type=float)
    e.add_argument("--p", type=int)
    e.set_defaults(func=cmd_encode)

    s = sub.add_parser("solve", parents=[common], help="run a solver on instances")
    s.add_argument("instance", nargs="+")
    s.add_argument("--solver", choices=["quantum", "exact", "greedy"])
    s.add_argument("--method", choices=["exhaustive", "enumeration"])
    s.add_argument("--p", type=int)
    s.add_argument("--delta", type=float)
    s.add_argument("--shots", type=int)
    s.add_argument("--iters", dest="n_iter", type=int)
    s.add_argument("--top-k", dest="top_k", type=int)
    s.add_argument("--lam", type=float)
    s.add_argument("--refine", action="store_const", const=True)
    s.add_argument("--t-max", dest="t_max", type=int)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("refine", parents=[common], help="refine solution candidates")
    r.add_argument("solution")
    r.add_argument("--instance")
    r.add_argument("--lam", type=float)
    r.add_argument("--t-max", dest="t_max", type=int)
    r.add_argument("--randomize-top2", dest="randomize_top2", action="store_const", const=True)
    r.set_defaults(func=cmd_refine)

    w = sub.add_parser("sweep", parents=[common], help="exact <H_C> over a delta x p grid")
    w.add_argument("instance")
    w.add_argument("--deltas", help="a:b:step or comma list (default 0.05:1.0:0.05)")
    w.add_argument("--depths", help="a:b or comma list (default 1:10)")
    w.add_argument("--lam", type=float)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("evaluate", parents=[common], help="KPI comparison tables")
    v.add_argument("solutions", nargs="+")
    v.add_argument("--instance")
    v.add_argument("--lam", type=float)
    v.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SspError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
