"""Command-line front end.

Verbs: coarsen, place, simulate, export-lp, gen, bench.  Every verb
exits 0 only when the whole run succeeded; domain errors print a single
"error:" line on stderr and exit 1.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import fileio
from .baselines import BaselineKind, greedy_place
from .bench import BenchConfig, run_bench
from .errors import OpPlaceError
from .fusion import gcof
from .milp import build_model, export_lp
from .placement import Solution, Status
from .profiles import effective_bandwidth
from .simulator import simulate
from .solver import SolveBudget, solve_exact
from .synth import GenSpec, gen_synthetic


def _cmd_coarsen(args) -> int:
    g = fileio.load_graph(args.graph)
    rules = fileio.load_rules(args.rules)
    overrides = fileio.load_overrides(args.overrides) if args.overrides else None
    out = gcof(g, rules, overrides)
    fileio.save_graph(out, args.out)
    print(f"coarsened {len(g)} ops / {len(g.edges)} edges "
          f"-> {len(out)} ops / {len(out.edges)} edges -> {args.out}")
    return 0


def _cmd_place(args) -> int:
    g = fileio.load_graph(args.graph)
    c = fileio.load_cluster(args.cluster)
    mesh = effective_bandwidth(c)
    if args.method == "exact":
        budget = SolveBudget(time_limit_s=args.budget, gap=args.gap)
        sol = solve_exact(g, c, mesh, budget)
    else:
        kind = (BaselineKind.EARLIEST_FINISH if args.method == "etf"
                else BaselineKind.EARLIEST_START)
        sched = greedy_place(g, c, mesh, kind)
        sol = Solution(Status.FEASIBLE, sched.makespan_s, sched)
    if sol.schedule is None:
        print(f"error: no placement found ({sol.status.value})", file=sys.stderr)
        return 1
    if args.out:
        fileio.save_placement(sol, args.out)
    print(f"{args.method}: status={sol.status.value} makespan={sol.objective_s:.6g}s"
          + (f" -> {args.out}" if args.out else ""))
    return 0


def _cmd_simulate(args) -> int:
    g = fileio.load_graph(args.graph)
    c = fileio.load_cluster(args.cluster)
    mesh = effective_bandwidth(c)
    placement = fileio.load_placement(args.placement)
    makespan, trace = simulate(g, c, mesh, placement)
    if args.out:
        fileio.save_trace(makespan, trace, args.out)
    print(f"simulated makespan={makespan:.6g}s events={len(trace)}"
          + (f" -> {args.out}" if args.out else ""))
    return 0


def _cmd_export_lp(args) -> int:
    g = fileio.load_graph(args.graph)
    c = fileio.load_cluster(args.cluster)
    mesh = effective_bandwidth(c)
    mdl = build_model(g, c, mesh)
    export_lp(mdl, args.out)
    print(f"wrote {args.out}: {len(mdl.vars)} vars "
          f"({mdl.num_binaries} binary), {len(mdl.rows)} rows")
    return 0


def _cmd_gen(args) -> int:
    spec = GenSpec(ops=args.ops, width=args.width, density=args.density,
                   devices=tuple(range(args.devices)))
    g = gen_synthetic(spec, args.seed)
    fileio.save_graph(g, args.out)
    print(f"generated {len(g)} ops / {len(g.edges)} edges (seed {args.seed}) "
          f"-> {args.out}")
    return 0


def _cmd_bench(args) -> int:
    graphs = []
    for path in args.graph or []:
        graphs.append((Path(path).stem, fileio.load_graph(path)))
    c = fileio.load_cluster(args.cluster)
    for spec_str in args.synthetic or []:
        if args.seed is None:
            print("error: --seed is required with --synthetic", file=sys.stderr)
            return 1
        ops, width, density = spec_str.split(":")
        spec = GenSpec(ops=int(ops), width=int(width), density=float(density),
                       devices=tuple(c.device_ids))
        graphs.append((f"syn{spec_str.replace(':', '-')}-s{args.seed}",
                       gen_synthetic(spec, args.seed)))
    rules = fileio.load_rules(args.rules)
    cfg = BenchConfig(
        graphs=tuple(graphs),
        cluster=c,
        rules=rules,
        methods=tuple(args.method),
        budget=SolveBudget(time_limit_s=args.budget, gap=args.gap),
        baseline=args.baseline,
        out_dir=args.out_dir,
    )
    report = run_bench(cfg)
    failed = [r for r in report.rows if r.status != "ok"]
    for r in report.rows:
        mk = f"{r.makespan_s:.6g}" if r.makespan_s is not None else "-"
        sp = f"{r.speedup:.3f}" if r.speedup is not None else "-"
        print(f"{r.graph:<28} {r.variant:<9} {r.method:<5} "
              f"makespan={mk:<12} speedup={sp}"
              + (f"  [{r.error}]" if r.error else ""))
    print(f"report: {report.paths['csv']}")
    if failed:
        print(f"error: {len(failed)} cell(s) failed", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opplace",
                                description="fusion-aware placement of op graphs "
                                            "onto heterogeneous devices")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("coarsen", help="fuse a graph with a rule set")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--rules", required=True)
    sp.add_argument("--overrides", help="fused-kernel cost overrides JSON")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_coarsen)

    sp = sub.add_parser("place", help="compute a placement")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--cluster", required=True)
    sp.add_argument("--method", choices=("exact", "etf", "sct"), default="exact")
    sp.add_argument("--gap", type=float, default=0.0,
                    help="relative optimality gap for exact search")
    sp.add_argument("--budget", type=float, default=None,
                    help="time budget in seconds for exact search")
    sp.add_argument("--out", help="placement JSON to write (assignment plus schedule)")
    sp.set_defaults(fn=_cmd_place)

    sp = sub.add_parser("simulate", help="replay a placement and emit a trace")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--cluster", required=True)
    sp.add_argument("--placement", required=True)
    sp.add_argument("--out", help="trace JSON to write")
    sp.set_defaults(fn=_cmd_simulate)

    sp = sub.add_parser("export-lp", help="write the placement model in LP format")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--cluster", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_export_lp)

    sp = sub.add_parser("gen", help="generate a synthetic layered graph")
    sp.add_argument("--ops", type=int, required=True)
    sp.add_argument("--width", type=int, required=True)
    sp.add_argument("--density", type=float, default=0.5)
    sp.add_argument("--devices", type=int, required=True,
                    help="number of devices to draw compute times for (ids 0..n-1)")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_gen)

    sp = sub.add_parser("bench", help="methods x graphs x {raw, coarsened}")
    sp.add_argument("--graph", action="append", help="graph JSON (repeatable)")
    sp.add_argument("--synthetic", action="append", metavar="OPS:WIDTH:DENSITY",
                    help="synthetic graph spec (repeatable, needs --seed)")
    sp.add_argument("--seed", type=int, help="seed for synthetic graphs")
    sp.add_argument("--cluster", required=True)
    sp.add_argument("--rules", required=True)
    sp.add_argument("--method", action="append", default=None,
                    choices=("exact", "etf", "sct"))
    sp.add_argument("--baseline", default="etf")
    sp.add_argument("--gap", type=float, default=0.0)
    sp.add_argument("--budget", type=float, default=None)
    sp.add_argument("--out-dir", default="bench_out")
    sp.set_defaults(fn=_cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "cmd", None) == "bench" and args.method is None:
        args.method = ["exact", "etf", "sct"]
    try:
        return args.fn(args)
    except (OpPlaceError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
