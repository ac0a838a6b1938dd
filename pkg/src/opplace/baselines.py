"""Greedy placement baselines.

Two single-pass heuristics place ops in topological order, committing
each to the device that looks best right now.  The returned schedule is
the canonical timing of the chosen assignment under the same dispatch
policy as the exact solver, so makespans are directly comparable.
"""

from __future__ import annotations

from enum import Enum

from .errors import InfeasibleMemoryError
from .graph import CompGraph
from .placement import Schedule
from .profiles import Cluster, EffectiveMesh
from .solver import _Instance, _schedule


class BaselineKind(str, Enum):
    # pick the device where the op would finish first
    EARLIEST_FINISH = "earliest-finish"
    # pick the device where the op could start first
    EARLIEST_START = "earliest-start"


def greedy_place(gc: CompGraph, c: Cluster, mesh: EffectiveMesh,
                 kind: BaselineKind = BaselineKind.EARLIEST_FINISH) -> Schedule:
    """Place ops one at a time, never revisiting a decision.

    While scoring a candidate device, the op's incoming flows are timed
    in flow id order against the partially committed schedule.  Ties
    between devices break toward the lower device id.  Raises
    InfeasibleMemoryError when no device can hold the next op, which can
    happen on tight-memory instances an exact search would still solve.
    """
    kind = BaselineKind(kind)
    inst = _Instance(gc, c, mesh)

    assign: dict[int, int] = {}
    load = {k: 0 for k in inst.devices}
    op_free = {k: 0.0 for k in inst.devices}
    out_free = {k: 0.0 for k in inst.devices}
    in_free = {k: 0.0 for k in inst.devices}
    op_end: dict[int, float] = {}

    flows_in: dict[int, list[int]] = {i: [] for i in inst.ops}
    for q in sorted(inst.flow_set):
        flows_in[inst.fdst[q]].append(q)

    for i in inst.op_order:
        best = None
        for k in inst.devices:
            if load[k] + inst.mem[i] > inst.cap[k]:
                continue
            out_f = dict(out_free)
            in_f = dict(in_free)
            ready = 0.0
            for q in flows_in[i]:
                ka = assign[inst.fsrc[q]]
                if ka == k:
                    fe = op_end[inst.fsrc[q]]
                else:
                    fs = max(op_end[inst.fsrc[q]], out_f[ka], in_f[k])
                    fe = fs + inst.flow_duration(q, ka, k)
                    out_f[ka] = fe
                    in_f[k] = fe
                if fe > ready:
                    ready = fe
            start = max(ready, op_free[k])
            finish = start + inst.p[i][k]
            score = finish if kind is BaselineKind.EARLIEST_FINISH else start
            if best is None or (score, k) < (best[0], best[1]):
                best = (score, k, start, finish, out_f, in_f)
        if best is None:
            free = max(inst.cap[k] - load[k] for k in inst.devices)
            raise InfeasibleMemoryError(inst.mem[i], free)
        _, k, start, finish, out_f, in_f = best
        assign[i] = k
        load[k] += inst.mem[i]
        op_end[i] = finish
        op_free[k] = finish
        out_free.update(out_f)
        in_free.update(in_f)

    return _schedule(inst, assign)
