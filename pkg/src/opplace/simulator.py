"""Discrete-event validation of placements.

simulate() replays a placement under the execution semantics (one op at
a time per device, crossing flows serialized per source-outbound and
per destination-inbound device) and is written as a separate code path
from the solver's scheduler: a lazy priority queue of candidate starts
instead of a ready-list scan.  Both resolve ties identically (largest
downstream critical path, then lowest id), and both use the same float
operations in the same order, so their timings agree exactly and the
cross-check in the test suite can demand bitwise equality.

check_feasibility() audits an arbitrary schedule and reports violations
as data.  Interval overlap is tested on open intervals, so schedules
that touch end-to-start are legal.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum

from .errors import MemoryExceededError, MissingCostError
from .graph import CompGraph, augment, topo_order
from .placement import Schedule
from .profiles import Cluster, EffectiveMesh


class EventKind(str, Enum):
    OP_START = "op-start"
    OP_END = "op-end"
    FLOW_START = "flow-start"
    FLOW_END = "flow-end"


_KIND_RANK = {k: i for i, k in enumerate(EventKind)}


@dataclass(frozen=True)
class Event:
    """One timestamped trace entry.

    Ops carry the device they ran on; crossing flows carry the
    (source device, destination device) channel; co-located flows carry
    the shared device and no channel.
    """

    time_s: float
    kind: EventKind
    node: int
    device: int | None = None
    channel: tuple[int, int] | None = None

    def sort_key(self) -> tuple[float, int, int]:
        return (self.time_s, _KIND_RANK[self.kind], self.node)


class ViolationKind(str, Enum):
    DEVICE_OVERLAP = "device-overlap"
    SOURCE_CHANNEL_OVERLAP = "source-channel-overlap"
    DEST_CHANNEL_OVERLAP = "dest-channel-overlap"
    PRECEDENCE_BREAK = "precedence-break"
    MEMORY_OVER = "memory-over"
    DURATION_MISMATCH = "duration-mismatch"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    details: str
    nodes: tuple[int, ...] = field(default=())


def simulate(gc: CompGraph, c: Cluster, mesh: EffectiveMesh,
             placement: dict[int, int]) -> tuple[float, list[Event]]:
    """Replay a total placement; returns (makespan, ordered trace).

    The trace is sorted by (time, kind, node) and includes start/end
    events for every op and every flow, zero-duration flows included.
    """
    aug = augment(gc)
    devices = c.device_ids
    cap = {k: c.device(k).mem_bytes for k in devices}

    load = {k: 0 for k in devices}
    for i in aug.op_ids:
        node = gc.node(i)
        k = placement[i]
        if k not in cap:
            raise KeyError(f"op {i} placed on unknown device {k}")
        if k not in node.compute_time:
            raise MissingCostError(i, k)
        load[k] += node.mem_bytes
    for k in devices:
        if load[k] > cap[k]:
            raise MemoryExceededError(k, load[k] - cap[k])

    flow_set = set(aug.flow_ids)
    dur: dict[int, float] = {}
    chan: dict[int, tuple[int, int] | None] = {}
    for i in aug.op_ids:
        dur[i] = gc.node(i).compute_time[placement[i]]
    for q, f in aug.flow_nodes.items():
        ka, kb = placement[f.src], placement[f.dst]
        if ka == kb:
            dur[q], chan[q] = 0.0, None
        else:
            dur[q], chan[q] = f.payload_bytes / mesh.bandwidth(ka, kb), (ka, kb)

    order = topo_order(aug)
    rank: dict[int, float] = {}
    for n in reversed(order):
        best = 0.0
        for s in aug.succs(n):
            if rank[s] > best:
                best = rank[s]
        rank[n] = dur[n] + best

    npred = {n: len(aug.preds(n)) for n in order}
    est = {n: 0.0 for n in order}
    op_free = {k: 0.0 for k in devices}
    out_free = {k: 0.0 for k in devices}
    in_free = {k: 0.0 for k in devices}

    def feasible_start(n: int) -> float:
        if n in flow_set:
            ch = chan[n]
            if ch is None:
                return est[n]
            return max(est[n], out_free[ch[0]], in_free[ch[1]])
        return max(est[n], op_free[placement[n]])

    heap: list[tuple[float, float, int]] = []
    for n in order:
        if npred[n] == 0:
            heapq.heappush(heap, (feasible_start(n), -rank[n], n))

    events: list[Event] = []
    op_ends: list[float] = []
    while heap:
        e, negr, n = heapq.heappop(heap)
        cur = feasible_start(n)
        if cur > e:
            # a resource advanced since this candidate was queued
            heapq.heappush(heap, (cur, negr, n))
            continue
        end = e + dur[n]
        if n in flow_set:
            ch = chan[n]
            if ch is None:
                dev = placement[aug.flow_nodes[n].src]
                events.append(Event(e, EventKind.FLOW_START, n, device=dev))
                events.append(Event(end, EventKind.FLOW_END, n, device=dev))
            else:
                out_free[ch[0]] = end
                in_free[ch[1]] = end
                events.append(Event(e, EventKind.FLOW_START, n, channel=ch))
                events.append(Event(end, EventKind.FLOW_END, n, channel=ch))
        else:
            op_free[placement[n]] = end
            op_ends.append(end)
            events.append(Event(e, EventKind.OP_START, n, device=placement[n]))
            events.append(Event(end, EventKind.OP_END, n, device=placement[n]))
        for s in aug.succs(n):
            npred[s] -= 1
            if est[s] < end:
                est[s] = end
            if npred[s] == 0:
                heapq.heappush(heap, (feasible_start(s), -rank[s], s))

    events.sort(key=Event.sort_key)
    return max(op_ends), events


def _open_overlap(s1: float, e1: float, s2: float, e2: float, tol: float) -> bool:
    return s1 < e2 - tol and s2 < e1 - tol


def check_feasibility(schedule: Schedule, gc: CompGraph, c: Cluster,
                      mesh: EffectiveMesh, tol: float = 0.0) -> list[Violation]:
    """Audit a schedule; empty result means feasible.

    tol widens every comparison, letting schedules recovered from MILP
    solver output pass despite solver-level rounding.  The default of
    zero is exact and is what internally produced schedules are held to.
    """
    aug = augment(gc)
    devices = c.device_ids
    assign = schedule.assignment
    starts, ends = schedule.starts, schedule.ends
    out: list[Violation] = []

    for n in aug.node_ids:
        if n not in starts or n not in ends:
            raise KeyError(f"schedule is missing node {n}")
    for i in aug.op_ids:
        if i not in assign or assign[i] not in c.device_ids:
            raise KeyError(f"schedule does not place op {i} on a known device")

    load = {k: 0 for k in devices}
    for i in aug.op_ids:
        load[assign[i]] += gc.node(i).mem_bytes
    for k in devices:
        if load[k] > c.device(k).mem_bytes:
            out.append(Violation(
                ViolationKind.MEMORY_OVER,
                f"device {k} holds {load[k]} bytes, capacity {c.device(k).mem_bytes}"))

    for n in aug.node_ids:
        if n in aug.flow_nodes:
            f = aug.flow_nodes[n]
            ka, kb = assign[f.src], assign[f.dst]
            want = 0.0 if ka == kb else f.payload_bytes / mesh.bandwidth(ka, kb)
        else:
            want = gc.node(n).compute_time[assign[n]]
        # compare end against start + duration, the direction schedules are
        # built in, so tol=0 means bitwise agreement
        if abs(ends[n] - (starts[n] + want)) > tol:
            out.append(Violation(
                ViolationKind.DURATION_MISMATCH,
                f"node {n} spans {ends[n] - starts[n]}, expected {want}", (n,)))
        if starts[n] < -tol:
            out.append(Violation(
                ViolationKind.DURATION_MISMATCH,
                f"node {n} starts before time zero ({starts[n]})", (n,)))

    for a, b in aug.links:
        if starts[b] < ends[a] - tol:
            out.append(Violation(
                ViolationKind.PRECEDENCE_BREAK,
                f"node {b} starts at {starts[b]} before {a} ends at {ends[a]}",
                (a, b)))

    by_device: dict[int, list[int]] = {k: [] for k in devices}
    for i in aug.op_ids:
        by_device[assign[i]].append(i)
    for k in devices:
        ops = by_device[k]
        for x in range(len(ops)):
            for y in range(x + 1, len(ops)):
                i, j = ops[x], ops[y]
                if _open_overlap(starts[i], ends[i], starts[j], ends[j], tol):
                    out.append(Violation(
                        ViolationKind.DEVICE_OVERLAP,
                        f"ops {i} and {j} overlap on device {k}", (i, j)))

    crossing = [(q, assign[f.src], assign[f.dst])
                for q, f in sorted(aug.flow_nodes.items())
                if assign[f.src] != assign[f.dst]]
    for x in range(len(crossing)):
        for y in range(x + 1, len(crossing)):
            q, qa, qb = crossing[x]
            r, ra, rb = crossing[y]
            if not _open_overlap(starts[q], ends[q], starts[r], ends[r], tol):
                continue
            if qa == ra:
                out.append(Violation(
                    ViolationKind.SOURCE_CHANNEL_OVERLAP,
                    f"flows {q} and {r} both leave device {qa}", (q, r)))
            if qb == rb:
                out.append(Violation(
                    ViolationKind.DEST_CHANNEL_OVERLAP,
                    f"flows {q} and {r} both arrive at device {qb}", (q, r)))
    return out
