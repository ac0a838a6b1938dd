"""Exact placement solving.

The search space is the op-to-device assignment; given a full assignment,
timing is resolved by an event-driven list scheduler (ops serialize per
device, crossing flows serialize per source-outbound and per
destination-inbound channel, ready tasks dispatch by largest downstream
critical path).  Branch-and-bound explores assignments in topological op
order with closed-form lower bounds; a brute-force enumerator provides
the oracle for small instances.

Both the scheduler and the bounds use plain float arithmetic with a fixed
evaluation order, so repeated runs are bit-identical and the brute-force
comparison can demand exact equality.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

from .errors import MemoryExceededError, MissingCostError, TooLargeError
from .graph import CompGraph, augment, topo_order
from .placement import Schedule, Solution, Status
from .profiles import Cluster, EffectiveMesh, effective_bandwidth


@dataclass
class SolveBudget:
    """Limits for the exact solver; None means unlimited."""

    time_limit_s: float | None = None
    gap: float = 0.0
    node_limit: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.gap < 1.0:
            raise ValueError("gap must be in [0, 1)")


class _Instance:
    """Preprocessed problem data shared across many schedule evaluations."""

    def __init__(self, gc: CompGraph, c: Cluster, mesh: EffectiveMesh):
        if len(gc) == 0:
            raise ValueError("cannot place an empty graph")
        self.gc = gc
        self.cluster = c
        self.mesh = mesh
        self.devices = c.device_ids
        for i in gc.node_ids:
            for k in self.devices:
                if k not in gc.node(i).compute_time:
                    raise MissingCostError(i, k)
        self.aug = augment(gc)
        self.ops = self.aug.op_ids
        self.flow_set = set(self.aug.flow_ids)
        self.cap = {k: c.device(k).mem_bytes for k in self.devices}
        self.mem = {i: gc.node(i).mem_bytes for i in self.ops}
        self.p = {i: {k: gc.node(i).compute_time[k] for k in self.devices} for i in self.ops}
        self.min_p = {i: min(self.p[i].values()) for i in self.ops}
        self.fsrc = {q: f.src for q, f in self.aug.flow_nodes.items()}
        self.fdst = {q: f.dst for q, f in self.aug.flow_nodes.items()}
        self.payload = {q: f.payload_bytes for q, f in self.aug.flow_nodes.items()}
        self.bw = {pair: mesh.bandwidth(*pair)
                   for pair in itertools.permutations(self.devices, 2)}
        self.topo = topo_order(self.aug)
        self.rev_topo = list(reversed(self.topo))
        self.succs = {n: self.aug.succs(n) for n in self.topo}
        self.preds = {n: self.aug.preds(n) for n in self.topo}
        self.op_order = topo_order(gc)

    def flow_duration(self, q: int, ka: int, kb: int) -> float:
        if ka == kb:
            return 0.0
        return self.payload[q] / self.bw[(ka, kb)]


def _schedule(inst: _Instance, assign: dict[int, int]) -> Schedule:
    """List-schedule one assignment; raises when a device memory overflows."""
    load = {k: 0 for k in inst.devices}
    for i in inst.ops:
        load[assign[i]] += inst.mem[i]
    for k in inst.devices:
        if load[k] > inst.cap[k]:
            raise MemoryExceededError(k, load[k] - inst.cap[k])

    dur: dict[int, float] = {}
    chan: dict[int, tuple[int, int] | None] = {}
    for i in inst.ops:
        dur[i] = inst.p[i][assign[i]]
    for q in inst.flow_set:
        ka, kb = assign[inst.fsrc[q]], assign[inst.fdst[q]]
        if ka == kb:
            dur[q], chan[q] = 0.0, None
        else:
            dur[q], chan[q] = inst.payload[q] / inst.bw[(ka, kb)], (ka, kb)

    # downstream critical path rank under this assignment
    rank: dict[int, float] = {}
    for n in inst.rev_topo:
        best = 0.0
        for s in inst.succs[n]:
            if rank[s] > best:
                best = rank[s]
        rank[n] = dur[n] + best

    npred = {n: len(inst.preds[n]) for n in inst.topo}
    est = {n: 0.0 for n in inst.topo}
    ready = [n for n in inst.topo if npred[n] == 0]
    op_free = {k: 0.0 for k in inst.devices}
    out_free = {k: 0.0 for k in inst.devices}
    in_free = {k: 0.0 for k in inst.devices}
    starts: dict[int, float] = {}
    ends: dict[int, float] = {}

    while ready:
        best_key = None
        for n in ready:
            if n in inst.flow_set:
                ch = chan[n]
                e = est[n] if ch is None else max(est[n], out_free[ch[0]], in_free[ch[1]])
            else:
                e = max(est[n], op_free[assign[n]])
            key = (e, -rank[n], n)
            if best_key is None or key < best_key:
                best_key = key
        e, _, n = best_key
        starts[n] = e
        ends[n] = e + dur[n]
        if n in inst.flow_set:
            ch = chan[n]
            if ch is not None:
                out_free[ch[0]] = ends[n]
                in_free[ch[1]] = ends[n]
        else:
            op_free[assign[n]] = ends[n]
        ready.remove(n)
        for s in inst.succs[n]:
            npred[s] -= 1
            if est[s] < ends[n]:
                est[s] = ends[n]
            if npred[s] == 0:
                ready.append(s)

    makespan = max(ends[i] for i in inst.ops)
    return Schedule(dict(assign), starts, ends, chan, makespan)


def schedule_for_assignment(gc: CompGraph, c: Cluster, mesh: EffectiveMesh,
                            assignment: dict[int, int]) -> Schedule:
    """Timing for a fixed assignment.

    The schedule is left-shifted: tasks commit in order of earliest
    feasible start, so no task could begin sooner without violating a
    precedence or resource constraint.
    """
    inst = _Instance(gc, c, mesh)
    for i in inst.ops:
        if i not in assignment:
            raise KeyError(f"assignment is missing op {i}")
        if assignment[i] not in inst.cap:
            raise KeyError(f"op {i} assigned to unknown device {assignment[i]}")
    return _schedule(inst, {i: assignment[i] for i in inst.ops})


class _Stop(Exception):
    pass


def solve_exact(gc: CompGraph, c: Cluster, mesh: EffectiveMesh,
                budget: SolveBudget | None = None) -> Solution:
    """Branch-and-bound over assignments, exact at gap 0.

    Ops branch in topological order, devices in ascending id order, so
    ties resolve to the lexicographically smallest optimal assignment.
    The node bound is the larger of the partial critical path (assigned
    ops exact, others at their fastest; flows exact once both endpoints
    are placed) and the busiest committed device load.
    """
    budget = budget or SolveBudget()
    inst = _Instance(gc, c, mesh)
    order = inst.op_order
    n = len(order)
    devices = inst.devices
    t0 = time.perf_counter()

    best_sched: Schedule | None = None
    best_obj = math.inf
    assign: dict[int, int] = {}
    load = {k: 0 for k in devices}
    load_time = {k: 0.0 for k in devices}
    visited = 0
    stopped = False

    def lower_bound() -> float:
        down: dict[int, float] = {}
        for nd in inst.rev_topo:
            if nd in inst.flow_set:
                si, di = inst.fsrc[nd], inst.fdst[nd]
                if si in assign and di in assign:
                    w = inst.flow_duration(nd, assign[si], assign[di])
                else:
                    w = 0.0
            else:
                w = inst.p[nd][assign[nd]] if nd in assign else inst.min_p[nd]
            best = 0.0
            for s in inst.succs[nd]:
                if down[s] > best:
                    best = down[s]
            down[nd] = w + best
        cp = max(down.values())
        busiest = max(load_time.values())
        return cp if cp > busiest else busiest

    def descend(idx: int):
        nonlocal best_sched, best_obj, visited, stopped
        visited += 1
        if budget.node_limit is not None and visited > budget.node_limit:
            raise _Stop
        if budget.time_limit_s is not None and (visited & 0xFF) == 0:
            if time.perf_counter() - t0 > budget.time_limit_s:
                raise _Stop
        if idx == n:
            sched = _schedule(inst, assign)
            if sched.makespan_s < best_obj:
                best_obj = sched.makespan_s
                best_sched = sched
            return
        i = order[idx]
        for k in devices:
            if load[k] + inst.mem[i] > inst.cap[k]:
                continue
            assign[i] = k
            load[k] += inst.mem[i]
            load_time[k] += inst.p[i][k]
            lb = lower_bound()
            if best_sched is None or lb < best_obj * (1.0 - budget.gap):
                descend(idx + 1)
            del assign[i]
            load[k] -= inst.mem[i]
            load_time[k] -= inst.p[i][k]

    try:
        descend(0)
    except _Stop:
        stopped = True

    if best_sched is not None:
        status = Status.FEASIBLE if stopped else Status.OPTIMAL
        gap = None if stopped else budget.gap
        return Solution(status, best_obj, best_sched, gap)
    return Solution(Status.BUDGET if stopped else Status.INFEASIBLE, math.inf, None)


def brute_force(gc: CompGraph, c: Cluster, mesh: EffectiveMesh) -> Solution:
    """Enumerate every assignment; the oracle for solve_exact.

    Guarded to 2^24 assignments.  Ties keep the first (lexicographically
    smallest) optimum, matching the branch-and-bound ordering.
    """
    inst = _Instance(gc, c, mesh)
    n = len(inst.ops)
    k = len(inst.devices)
    if n * math.log2(k) > 24:
        raise TooLargeError(n, k)
    order = inst.op_order
    best_sched: Schedule | None = None
    best_obj = math.inf
    for combo in itertools.product(inst.devices, repeat=n):
        assign = dict(zip(order, combo))
        try:
            sched = _schedule(inst, assign)
        except MemoryExceededError:
            continue
        if sched.makespan_s < best_obj:
            best_obj = sched.makespan_s
            best_sched = sched
    if best_sched is None:
        return Solution(Status.INFEASIBLE, math.inf, None)
    return Solution(Status.OPTIMAL, best_obj, best_sched, 0.0)


def solve_with_derived_mesh(gc: CompGraph, c: Cluster,
                            budget: SolveBudget | None = None) -> Solution:
    """Convenience wrapper deriving the effective mesh first."""
    return solve_exact(gc, c, effective_bandwidth(c), budget)
