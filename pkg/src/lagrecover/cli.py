"""Command-line interface: ``lagrecover {gen,solve,verify,bench}``.

Exit codes: 0 success, 2 infeasible, 3 invalid input, 4 internal error.
Failures print a JSON object ``{"error", "message", "exit_code"}`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io as lio
from .contraction import METHODS, contract_instance
from .dual import Constant, ConstantEpochDecay, Diminishing, StopCriteria
from .errors import ContractionWarning, Infeasible, InvalidInstance, LagrecoverError, TooLarge
from .inner import adjusted_prices, solve_inner_all
from .instances import example1, random_lattice_instance, symmetric_counterexample
from .model import FEASIBILITY_TOL, PevBattery, as_assignment, brute_force_solve, validate_instance
from .pev import FleetParams, generate_fleet
from .recover import bounds, count_coincident, default_slater_point, slater_margin, solve

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_INTERNAL = 0, 2, 3, 4
THREADS_ENV = "LAGRECOVER_THREADS"

REPORT_COLUMNS = [
    "instance", "digest", "n_subsystems", "m", "contraction", "rho_inf", "step_rule",
    "dual_bound", "dual_bound_kind", "objective", "gap", "gap_pct", "feasible", "source",
    "iterations", "extensions", "wall_time",
]
BENCH_COLUMNS = [
    "kind", "n_pevs", "seed", "objective", "dual_bound", "gap_pct", "feasible", "wall_time", "iterations",
    "gap_min", "gap_avg", "gap_max", "time_min", "time_avg", "time_max", "trend_ok",
]

_NUM = {"type": ["number", "null"]}
REPORT_SCHEMA = {
    "type": "object",
    "required": REPORT_COLUMNS,
    "properties": {
        "instance": {"type": "string"},
        "digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "n_subsystems": {"type": "integer", "minimum": 0},
        "m": {"type": "integer", "minimum": 0},
        "contraction": {"type": "string"},
        "rho_inf": {"type": "number", "minimum": 0},
        "step_rule": {"type": "object"},
        "dual_bound": _NUM,
        "dual_bound_kind": {"type": ["string", "null"]},
        "objective": {"type": "number"},
        "gap": _NUM,
        "gap_pct": _NUM,
        "feasible": {"type": "boolean"},
        "source": {"type": "string"},
        "iterations": {"type": "integer", "minimum": 0},
        "extensions": {"type": "integer", "minimum": 0},
        "wall_time": {"type": "number", "minimum": 0},
    },
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return val


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return vals


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _add_dual_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--contraction", choices=METHODS, default="basic")
    p.add_argument("--step-rule", choices=("epoch", "constant", "diminishing"), default="epoch")
    p.add_argument("--step-c0", type=float, default=None,
                   help="initial or constant step; defaults: price scale / ||g(0)||_inf (epoch), 0.01 (constant), 1.0 (diminishing)")
    p.add_argument("--epoch", type=_positive_int, default=25, help="iterations per step decrease")
    p.add_argument("--decay", type=float, default=0.5, help="step factor applied every epoch")
    p.add_argument("--max-iters", type=_positive_int, default=500)
    p.add_argument("--tol-viol", type=float, default=0.0, help="stop once max positive violation is below this")
    p.add_argument("--tol", type=float, default=FEASIBILITY_TOL, help="feasibility tolerance")
    p.add_argument("--bound", choices=("original", "contracted", "none"), default="original")


def make_rule(args):
    if args.step_rule == "constant":
        return Constant(0.01 if args.step_c0 is None else args.step_c0)
    if args.step_rule == "diminishing":
        return Diminishing(1.0 if args.step_c0 is None else args.step_c0)
    return ConstantEpochDecay(c0=args.step_c0, factor=args.decay, epoch_len=args.epoch)


def _rule_dict(rule) -> dict:
    return {"type": type(rule).__name__, **asdict(rule)}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lagrecover", description="Feasible primal recovery for block-coupled integer programs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write an instance file")
    g.add_argument("--pevs", type=_positive_int, help="PEV fleet size")
    g.add_argument("--example", choices=("example1", "counterexample", "random"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--v2g", action="store_true")
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--name", default=None, help="file stem (default derived from the arguments)")

    s = sub.add_parser("solve", help="contract, solve the dual, recover a primal solution")
    s.add_argument("instance")
    _add_dual_flags(s)
    s.add_argument("--out", default=None, help="directory for report and trace CSV (default: stdout only)")
    s.add_argument("--format", choices=("json", "csv"), default="json")

    v = sub.add_parser("verify", help="LP / brute-force cross-checks and bound certificate")
    v.add_argument("instance")
    _add_dual_flags(v)
    v.add_argument("--brute-force-cap", type=int, default=10**7)
    v.add_argument("--out", default=None)

    b = sub.add_parser("bench", help="sweep fleet sizes and seeds")
    b.add_argument("--sizes", type=_int_list, default=[50, 100, 200, 400])
    b.add_argument("--seeds", type=_positive_int, default=10)
    mode = b.add_mutually_exclusive_group()
    mode.add_argument("--charge-only", action="store_true", default=True)
    mode.add_argument("--v2g", action="store_true")
    _add_dual_flags(b)
    b.add_argument("--threads", type=_positive_int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")
    b.add_argument("--out", default=None)
    b.add_argument("--format", choices=("json", "csv"), default="csv")
    return parser


# ------------------------------------------------------------------ commands


def _emit(text: str, out_dir, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)
    print(str(path / name))


def cmd_gen(args) -> int:
    if (args.pevs is None) == (args.example is None):
        raise UsageError("give exactly one of --pevs or --example")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.pevs is not None:
        params = FleetParams(n_pevs=args.pevs, seed=args.seed, v2g=args.v2g)
        inst = generate_fleet(params)
        stem = args.name or f"pev_n{args.pevs}_s{args.seed}{'_v2g' if args.v2g else ''}"
        (out / f"{stem}.params.json").write_text(json.dumps(asdict(params), indent=2) + "\n")
    else:
        inst = {"example1": example1, "counterexample": symmetric_counterexample}.get(args.example)
        inst = inst() if inst else random_lattice_instance(args.seed)
        stem = args.name or (args.example if args.example != "random" else f"random_s{args.seed}")
    lio.save_instance(inst, out / f"{stem}.json")
    print(str(out / f"{stem}.json"))
    return EXIT_OK


def _load(path: str):
    inst = lio.load_instance(path)
    rep = validate_instance(inst)
    if not rep.ok:
        raise InvalidInstance("; ".join(rep.violations))
    return inst


def run_report(inst, args, name: str = ""):
    rule = make_rule(args)
    stop = StopCriteria(tol_viol=args.tol_viol)
    res = solve(inst, args.contraction, rule, args.max_iters, stop, tol=args.tol, dual_bound=args.bound)
    rec = res.recovered
    gap = rec.gap
    report = {
        "instance": name,
        "digest": lio.instance_digest(inst),
        "n_subsystems": inst.size,
        "m": inst.m,
        "contraction": res.contraction.method,
        "rho_inf": res.contraction.norm_inf,
        "step_rule": _rule_dict(rule),
        "dual_bound": rec.dual_bound,
        "dual_bound_kind": rec.dual_bound_kind,
        "objective": rec.objective,
        "gap": gap,
        "gap_pct": None if rec.relative_gap is None else 100.0 * rec.relative_gap,
        "feasible": bool(rec.feasible_for_original),
        "source": rec.source,
        "iterations": res.iterations,
        "extensions": res.extensions,
        "wall_time": res.wall_time,
    }
    return report, res


def _csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if row.get(k) is None else repr(row[k]) if isinstance(row.get(k), float) else row[k])
                    for k in columns})
    return buf.getvalue()


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    report, res = run_report(inst, args, Path(args.instance).name)
    if args.format == "json":
        _emit(json.dumps(report, indent=2) + "\n", args.out, "report.json")
    else:
        _emit(_csv_text([report], REPORT_COLUMNS), args.out, "report.csv")
    if args.out is not None:
        res.trace.to_csv(Path(args.out) / "trace.csv")
    return EXIT_OK if report["feasible"] else EXIT_INFEASIBLE


def cmd_verify(args) -> int:
    from .lp import recover_xlp, solve_extended, strict_complementarity_check

    inst = _load(args.instance)
    report, res = run_report(inst, args, Path(args.instance).name)
    cert = {
        "dual_bound": report["dual_bound"],
        "objective": report["objective"],
        "gap": report["gap"],
        "feasible": report["feasible"],
        "lp": None,
        "brute_force": None,
        "coincidence": None,
    }
    enumerable = not any(isinstance(s, PevBattery) for s in inst.subsystems)
    if enumerable:
        lp, sol = solve_extended(inst)
        x_lp = recover_xlp(lp, sol)
        x_dual, _ = solve_inner_all(inst, adjusted_prices(inst, sol.lam))
        count = count_coincident(as_assignment(x_dual), x_lp)
        cert["lp"] = {
            "objective": sol.objective,
            "lambda": sol.lam.tolist(),
            "complementarity": strict_complementarity_check(lp, sol).to_dict(),
        }
        cert["coincidence"] = {"count": count, "required": inst.size - inst.m, "holds": count >= inst.size - inst.m}
        try:
            obj, _ = brute_force_solve(inst, cap=args.brute_force_cap)
            cert["brute_force"] = {"objective": obj, "gap_to_optimum": report["objective"] - obj}
        except TooLarge as exc:
            cert["brute_force"] = {"skipped": str(exc)}
    contracted = contract_instance(inst, res.contraction, warn=False)
    zeta = slater_margin(contracted, default_slater_point(inst))
    cert["bounds"] = bounds(inst, res.contraction, zeta).to_dict()
    _emit(json.dumps(cert, indent=2) + "\n", args.out, "certificate.json")
    return EXIT_OK if report["feasible"] else EXIT_INFEASIBLE


def _trend_ok(means: list[float], allowed_inversions: int = 1) -> bool:
    inversions = sum(1 for a, b in zip(means, means[1:]) if not b < a)
    return inversions <= allowed_inversions


def cmd_bench(args) -> int:
    v2g = bool(args.v2g)
    threads = args.threads or default_threads()
    jobs = [(n, seed) for n in args.sizes for seed in range(args.seeds)]

    def one(job):
        n, seed = job
        inst = generate_fleet(FleetParams(n_pevs=n, seed=seed, v2g=v2g))
        t0 = time.perf_counter()
        report, _ = run_report(inst, args, f"pev_n{n}_s{seed}")
        return {"kind": "run", "n_pevs": n, "seed": seed, "objective": report["objective"],
                "dual_bound": report["dual_bound"], "gap_pct": report["gap_pct"], "feasible": report["feasible"],
                "wall_time": time.perf_counter() - t0, "iterations": report["iterations"]}

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ContractionWarning)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(one, jobs))
        else:
            rows = [one(j) for j in jobs]

    summaries, means = [], []
    for n in args.sizes:
        runs = [r for r in rows if r["n_pevs"] == n]
        gaps = np.array([r["gap_pct"] for r in runs if r["gap_pct"] is not None], dtype=float)
        times = np.array([r["wall_time"] for r in runs])
        mean = float(gaps.mean()) if len(gaps) else float("nan")
        means.append(mean)
        summaries.append({"kind": "summary", "n_pevs": n, "feasible": all(r["feasible"] for r in runs),
                          "gap_min": float(gaps.min()) if len(gaps) else None, "gap_avg": mean,
                          "gap_max": float(gaps.max()) if len(gaps) else None,
                          "time_min": float(times.min()), "time_avg": float(times.mean()),
                          "time_max": float(times.max())})
    trend = _trend_ok(means)
    for s in summaries:
        s["trend_ok"] = trend
    if args.format == "csv":
        _emit(_csv_text(rows + summaries, BENCH_COLUMNS), args.out, "bench.csv")
    else:
        _emit(json.dumps({"runs": rows, "summary": summaries, "trend_ok": trend}, indent=2) + "\n",
              args.out, "bench.json")
    return EXIT_OK if all(r["feasible"] for r in rows) else EXIT_INFEASIBLE


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "verify": cmd_verify, "bench": cmd_bench}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("UsageError", str(exc), EXIT_INVALID)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("UsageError", str(exc), EXIT_INVALID)
    except Infeasible as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_INFEASIBLE)
    except (InvalidInstance, FileNotFoundError, IsADirectoryError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_INVALID)
    except LagrecoverError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_INTERNAL)
    except Exception as exc:  # noqa: BLE001 - last-resort machine-readable error
        return _fail(type(exc).__name__, str(exc), EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
