"""Benchmark harness: methods x graphs x {raw, coarsened}.

Each cell places one graph with one method, timing placement generation
only (file IO and simulation excluded) as the median of a few repeated
runs, then reports the simulated makespan and the speedup against the
configured baseline method on the same graph variant.  Failures are
recorded in the cell and the run continues.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

from .baselines import BaselineKind, greedy_place
from .fusion import FusionRuleSet, gcof
from .graph import CompGraph
from .placement import Schedule
from .profiles import Cluster, CostOverrides, EffectiveMesh, effective_bandwidth
from .simulator import simulate
from .solver import SolveBudget, solve_exact

METHODS = ("exact", "etf", "sct")
VARIANTS = ("raw", "coarsened")


@dataclass
class BenchConfig:
    graphs: tuple[tuple[str, CompGraph], ...]
    cluster: Cluster
    rules: FusionRuleSet
    methods: tuple[str, ...] = METHODS
    budget: SolveBudget = field(default_factory=SolveBudget)
    baseline: str = "etf"
    out_dir: str | Path = "bench_out"
    overrides: CostOverrides | None = None
    repeats: int = 3

    def __post_init__(self):
        if not self.graphs:
            raise ValueError("no graphs to benchmark")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {unknown}")
        if self.baseline not in self.methods:
            raise ValueError(f"baseline {self.baseline!r} not among methods")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass
class BenchRow:
    graph: str
    variant: str
    method: str
    ops: int
    edges: int
    gen_time_s: float | None = None
    makespan_s: float | None = None
    speedup: float | None = None
    status: str = "ok"
    error: str = ""


@dataclass
class BenchReport:
    rows: list[BenchRow]
    paths: dict[str, Path]


def _place(method: str, gc: CompGraph, c: Cluster, mesh: EffectiveMesh,
           budget: SolveBudget) -> Schedule:
    if method == "exact":
        sol = solve_exact(gc, c, mesh, budget)
        if sol.schedule is None:
            raise RuntimeError(f"exact solver found no placement ({sol.status.value})")
        return sol.schedule
    kind = BaselineKind.EARLIEST_FINISH if method == "etf" else BaselineKind.EARLIEST_START
    return greedy_place(gc, c, mesh, kind)


def run_bench(cfg: BenchConfig) -> BenchReport:
    """Run every cell, write CSV/JSON/plot files, return the report.

    Makespans are fully deterministic; only the wall-time columns vary
    between runs.
    """
    mesh = effective_bandwidth(cfg.cluster)
    rows: list[BenchRow] = []

    for name, g in cfg.graphs:
        variants: dict[str, CompGraph | Exception] = {"raw": g}
        try:
            variants["coarsened"] = gcof(g, cfg.rules, cfg.overrides)
        except Exception as exc:  # recorded per cell below
            variants["coarsened"] = exc

        for variant in VARIANTS:
            gv = variants[variant]
            for method in cfg.methods:
                if isinstance(gv, Exception):
                    rows.append(BenchRow(name, variant, method, 0, 0,
                                         status="error", error=str(gv)))
                    continue
                row = BenchRow(name, variant, method, len(gv), len(gv.edges))
                try:
                    times = []
                    sched = None
                    for _ in range(cfg.repeats):
                        t0 = time.perf_counter()
                        sched = _place(method, gv, cfg.cluster, mesh, cfg.budget)
                        times.append(time.perf_counter() - t0)
                    row.gen_time_s = statistics.median(times)
                    row.makespan_s, _ = simulate(gv, cfg.cluster, mesh,
                                                 sched.assignment)
                except Exception as exc:
                    row.status = "error"
                    row.error = str(exc)
                rows.append(row)

    base = {(r.graph, r.variant): r.makespan_s
            for r in rows if r.method == cfg.baseline}
    for r in rows:
        bm = base.get((r.graph, r.variant))
        if r.makespan_s and bm:
            r.speedup = bm / r.makespan_s

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / "bench.csv",
        "json": out / "bench.json",
        "plot_speedup": out / "plot_speedup.csv",
        "plot_gentime": out / "plot_gentime.csv",
    }
    fields = ["graph", "variant", "method", "ops", "edges",
              "gen_time_s", "makespan_s", "speedup", "status", "error"]
    with paths["csv"].open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({f: getattr(r, f) if getattr(r, f) is not None else ""
                        for f in fields})
    paths["json"].write_text(json.dumps({
        "schema": 1,
        "kind": "bench",
        "baseline": cfg.baseline,
        "rows": [{f: getattr(r, f) for f in fields} for r in rows],
    }, indent=2) + "\n")
    for key, col in (("plot_speedup", "speedup"), ("plot_gentime", "gen_time_s")):
        with paths[key].open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["graph", "variant", "method", col])
            for r in rows:
                val = getattr(r, col)
                w.writerow([r.graph, r.variant, r.method,
                            val if val is not None else ""])
    return BenchReport(rows, paths)
