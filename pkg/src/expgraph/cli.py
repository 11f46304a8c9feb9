"""Command-line front end.

Subcommands: solve, degree, reduce, scan, examples, verify.  Exit codes:
0 on a completed run (an empty solution set is a legitimate result),
2 on malformed files, 3 on configuration contradictions, 4 on internal
invariant breaches or failed verification rows.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import apriori, degree as degree_mod, existence
from .graphs import GraphFormatError
from .instances import (
    InstanceFormatError,
    RunReport,
    instance_digest,
    instance_to_dict,
    load_instance,
    solution_set_to_dict,
    solution_to_dict,
)
from .nonlinearity import classify, predicted_degree
from .reduction import InvariantError, schur_reduce
from .solver import ConfigError, SolverConfig, multistart_enumerate
from .verify import run_matrix

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_CONFIG = 3
EXIT_INVARIANT = 4

PLOT_SCRIPT = """\
#!/usr/bin/env python3
# reads the adjacent CSV and plots its second column against the first
import csv, sys
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv_name!r}
with open(path) as fh:
    rows = list(csv.reader(fh))
header, body = rows[0], rows[1:]
xs = [float(r[0]) for r in body]
ys = [float(r[1]) for r in body]
plt.plot(xs, ys, marker="o")
plt.xlabel(header[0]); plt.ylabel(header[1])
plt.tight_layout(); plt.savefig(path.replace(".csv", ".png"), dpi=150)
"""


def _default_seed() -> int:
    return int(os.environ.get("EXPGRAPH_SEED", "0"))


def _build_config(inst, args) -> SolverConfig:
    cfg = inst.config or SolverConfig()
    overrides = {}
    if getattr(args, "tol", None) is not None:
        overrides["tol"] = args.tol
    if getattr(args, "budget", None) is not None:
        overrides["budget"] = args.budget
    if getattr(args, "box", None) is not None:
        overrides["box_radius"] = args.box
    seed = args.seed if getattr(args, "seed", None) is not None else _default_seed()
    overrides["seed"] = seed
    return replace(cfg, **overrides)


def _emit(args, report: RunReport) -> None:
    text = report.to_json()
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    cfg = _build_config(inst, args)
    t0 = time.perf_counter()
    if args.start is not None:
        with open(args.start, "r", encoding="utf-8") as fh:
            u0 = np.asarray(json.load(fh), dtype=float)
        from .solver import newton_solve

        sol = newton_solve(inst.graph, inst.eq, u0, cfg)
        results = {"mode": "newton",
                   "solution": None if sol is None else solution_to_dict(sol)}
    else:
        sols = multistart_enumerate(inst.graph, inst.eq, cfg)
        results = {"mode": "multistart", "solution_set": solution_set_to_dict(sols)}
    report = RunReport("solve", instance_digest(inst.raw), cfg.seed, asdict(cfg),
                       results, {"seconds": time.perf_counter() - t0})
    _emit(args, report)
    return EXIT_OK


def cmd_degree(args) -> int:
    inst = load_instance(args.instance)
    cfg = _build_config(inst, args)
    t0 = time.perf_counter()
    if args.predict_only:
        pred = predicted_degree(inst.graph, inst.eq)
        label = classify(inst.graph, inst.eq)
        results = {"predicted": pred, "structural": label.structural,
                   "regime": label.regime, "n2": label.n2}
        report = RunReport("degree", instance_digest(inst.raw), cfg.seed,
                           asdict(cfg), results,
                           {"seconds": time.perf_counter() - t0})
        _emit(args, report)
        return EXIT_OK
    if args.homotopy:
        path = degree_mod.canonical_homotopy(inst.graph, inst.eq)
        track = degree_mod.track_homotopy(path, cfg, samples=args.samples)
        rows = [(f"{t:.6f}", "" if r.empirical is None else r.empirical,
                 len(r.solutions)) for t, r in zip(track.ts, track.reports)]
        if args.format == "csv":
            sys.stdout.write(_csv_text(("t", "degree", "solutions"), rows))
            return EXIT_OK
        results = {
            "constancy": track.constancy,
            "witnesses": list(path.witnesses),
            "guard_K": path.guard_K,
            "samples": [{"t": t,
                         "empirical": r.empirical,
                         "certified": r.certified,
                         "solutions": len(r.solutions)}
                        for t, r in zip(track.ts, track.reports)],
        }
    else:
        rep = degree_mod.empirical_degree(inst.graph, inst.eq, cfg)
        results = {
            "empirical": rep.empirical,
            "predicted": rep.predicted,
            "certified": rep.certified,
            "bounded_hypothesis": rep.bounded_hypothesis,
            "solution_set": solution_set_to_dict(rep.solutions),
        }
    report = RunReport("degree", instance_digest(inst.raw), cfg.seed, asdict(cfg),
                       results, {"seconds": time.perf_counter() - t0})
    _emit(args, report)
    return EXIT_OK


def cmd_reduce(args) -> int:
    inst = load_instance(args.instance)
    cfg = _build_config(inst, args)
    t0 = time.perf_counter()
    rs = schur_reduce(inst.graph, inst.eq)
    reduced = instance_to_dict(rs.graph, rs.eq)
    lift_block = {
        "kept": [inst.graph.ids[i] for i in rs.part.kept],
        "removed": [inst.graph.ids[i] for i in rs.part.removed],
    }
    if len(rs.part.removed) <= 50:
        lift_block["Q"] = [[float(v) for v in row] for row in rs.Q]
        lift_block["R"] = [[float(v) for v in row] for row in rs.R]
        lift_block["source_removed"] = [float(v) for v in rs.source_removed]
    results = {"reduced_instance": reduced, "lift": lift_block}
    report = RunReport("reduce", instance_digest(inst.raw), cfg.seed, asdict(cfg),
                       results, {"seconds": time.perf_counter() - t0})
    _emit(args, report)
    return EXIT_OK


def cmd_scan(args) -> int:
    inst = load_instance(args.instance)
    cfg = _build_config(inst, args)
    t0 = time.perf_counter()
    direction = {"pos": 1, "neg": -1, "auto": None}[args.direction]
    est = existence.estimate_cn(inst.graph, inst.eq, cfg, direction=direction,
                                bracket_rtol=args.bracket_tol)
    probes = []
    for s in np.linspace(est.value / 8, min(est.bracket[1] * 1.5,
                                            args.c_max or est.bracket[1] * 1.5), 9):
        eq_s = existence.with_constant(inst.eq, est.direction * s)
        sols = multistart_enumerate(inst.graph, eq_s,
                                    replace(cfg, budget=max(cfg.budget // 4, 50)))
        min_res = min((x.residual_norm for x in sols), default=float("nan"))
        probes.append((float(est.direction * s), len(sols), min_res))
    csv_text = _csv_text(("c", "solutions", "min_residual"),
                         [(f"{c:.8g}", n, f"{r:.3e}") for c, n, r in probes])
    if args.format == "csv":
        sys.stdout.write(csv_text)
    else:
        results = {
            "value": est.value,
            "direction": est.direction,
            "bracket": list(est.bracket),
            "upper_bound": est.upper_bound,
            "raw_bounds": list(est.raw_bounds),
            "ceiling_exceeded": est.ceiling_exceeded,
            "probes": [{"c": c, "solutions": n,
                        "min_residual": None if np.isnan(r) else r}
                       for c, n, r in probes],
        }
        report = RunReport("scan", instance_digest(inst.raw), cfg.seed, asdict(cfg),
                           results, {"seconds": time.perf_counter() - t0})
        _emit(args, report)
    if args.csv_out:
        with open(args.csv_out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    if args.plot_script:
        with open(args.plot_script, "w", encoding="utf-8") as fh:
            fh.write(PLOT_SCRIPT.format(csv_name=args.csv_out or "scan.csv"))
    return EXIT_OK


def cmd_examples(args) -> int:
    params = [float(p) for p in args.param.split(",")] if args.param else [0.1, 0.01]
    seq = apriori.blowup_family(args.kind, params, a=args.a, b=args.b)
    rows = []
    for p, sols, verdict in zip(seq.params, seq.solutions, seq.verdicts):
        if sols:
            mn = min(float(s.u.min()) for s in sols)
            mx = max(float(s.u.max()) for s in sols)
            rows.append((f"{p:.8g}", f"{mn:.8g}", f"{mx:.8g}",
                         verdict or "solutions-found"))
        else:
            rows.append((f"{p:.8g}", "", "", verdict or "no-solution"))
    text = _csv_text(("param", "min_u", "max_u", "verdict"), rows)
    if args.format == "json":
        print(json.dumps({"kind": args.kind,
                          "rows": [dict(zip(("param", "min_u", "max_u", "verdict"),
                                            r)) for r in rows]}, indent=2))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    rows = run_matrix(quick=args.quick)
    width = max(len(r.name) for r in rows)
    failed = 0
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  [{r.seconds:6.2f}s]  {r.detail}")
        failed += not r.passed
    print(f"{'-' * width}")
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expgraph",
        description="Exponential-nonlinearity elliptic equations on finite "
                    "weighted graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_instance=True):
        if with_instance:
            p.add_argument("instance", help="instance JSON file")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--box", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output", default=None, help="write the JSON report here")

    p = sub.add_parser("solve", help="enumerate solutions")
    common(p)
    p.add_argument("--from", dest="start", default=None,
                   help="JSON file with an initial guess (single damped-Newton run)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("degree", help="empirical and predicted Brouwer degree")
    common(p)
    p.add_argument("--predict-only", action="store_true")
    p.add_argument("--homotopy", action="store_true",
                   help="track the canonical deformation")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("reduce", help="eliminate linear vertices")
    common(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("scan", help="existence threshold in |c|")
    common(p)
    p.add_argument("--direction", choices=("pos", "neg", "auto"), default="auto")
    p.add_argument("--c-max", type=float, default=None)
    p.add_argument("--bracket-tol", type=float, default=1e-3)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--csv-out", default=None)
    p.add_argument("--plot-script", default=None,
                   help="write a small plotting script here")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("examples", help="built-in two-vertex families")
    p.add_argument("--kind", required=True,
                   choices=("ex34", "ex35", "ex36", "ex51", "ex52", "ex53"))
    p.add_argument("--param", default=None, help="comma-separated parameter values")
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("verify", help="run the built-in verification matrix")
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceFormatError, GraphFormatError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
