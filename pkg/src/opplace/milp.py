"""Mixed-integer model of the joint placement and scheduling problem.

Decision variables: x (op-to-device assignment), z (whether a flow crosses
devices), u (which ordered device pair carries it), S/C (start and
completion of every op and flow), plus disjunction binaries serializing
unrelated ops that share a device and unrelated flows that share a source
or destination device.  The makespan T is minimized.

The model is built solver-agnostic: rows are plain linear terms, and
``export_lp`` writes deterministic LP-format text any MILP solver can
read.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import (ConstraintViolatedError, InfeasibleMemoryError,
                     MissingCostError, NonIntegralError)
from .graph import AugGraph, CompGraph, augment, succ_closure
from .placement import Schedule
from .profiles import Cluster, EffectiveMesh, comm_time

INT_TOL = 1e-6
ROW_TOL = 1e-6


@dataclass(frozen=True)
class BigM:
    """Deactivation constants, all set to the schedule horizon H."""

    ms: float
    ml: float
    mr: float


def big_m(aug: AugGraph, c: Cluster, mesh: EffectiveMesh) -> BigM:
    """Horizon H: every op at its slowest plus every flow at its slowest."""
    devices = c.device_ids
    h = 0.0
    for i in aug.op_ids:
        h += max(aug.source.node(i).compute_time[k] for k in devices)
    for q in aug.flow_ids:
        f = aug.flow_nodes[q]
        worst = 0.0
        for a in devices:
            for b in devices:
                if a != b:
                    worst = max(worst, comm_time(f.payload_bytes, a, b, mesh))
        h += worst
    return BigM(h, h, h)


@dataclass(frozen=True)
class Var:
    name: str
    binary: bool


@dataclass(frozen=True)
class Row:
    name: str
    terms: tuple[tuple[float, int], ...]  # (coefficient, variable index)
    sense: str  # "<=" or "="
    rhs: float


class _RowBuilder:
    """Accumulates coefficients so duplicate variables merge."""

    def __init__(self):
        self.coefs: dict[int, float] = {}

    def add(self, coef: float, var: int) -> "_RowBuilder":
        self.coefs[var] = self.coefs.get(var, 0.0) + coef
        return self

    def row(self, name: str, sense: str, rhs: float) -> Row:
        terms = tuple((c, v) for v, c in sorted(self.coefs.items()) if c != 0.0)
        return Row(name, terms, sense, rhs)


class MilpModel:
    """Variable table, rows, and the index maps needed for extraction."""

    def __init__(self, aug: AugGraph, c: Cluster, mesh: EffectiveMesh, m: BigM):
        self.aug = aug
        self.cluster = c
        self.mesh = mesh
        self.big_m = m
        self.vars: list[Var] = []
        self.rows: list[Row] = []
        self.x_idx: dict[tuple[int, int], int] = {}
        self.z_idx: dict[int, int] = {}
        self.u_idx: dict[tuple[int, int, int], int] = {}
        self.s_idx: dict[int, int] = {}
        self.c_idx: dict[int, int] = {}
        self.dord_idx: dict[tuple[int, int], int] = {}
        self.dcom_idx: dict[tuple[int, int], int] = {}
        self.t_idx: int = -1

    def _new_var(self, name: str, binary: bool) -> int:
        self.vars.append(Var(name, binary))
        return len(self.vars) - 1

    @property
    def num_binaries(self) -> int:
        return sum(1 for v in self.vars if v.binary)

    @property
    def objective_var(self) -> str:
        return self.vars[self.t_idx].name


def build_model(gc: CompGraph, c: Cluster, mesh: EffectiveMesh) -> MilpModel:
    """Assemble the full model for a (possibly coarsened) graph.

    Raises MissingCostError when an op lacks a time on a cluster device and
    InfeasibleMemoryError when the ops cannot fit the cluster at all.
    """
    if len(gc) == 0:
        raise ValueError("cannot build a model for an empty graph")
    devices = c.device_ids
    for i in gc.node_ids:
        for k in devices:
            if k not in gc.node(i).compute_time:
                raise MissingCostError(i, k)
    total_mem = sum(n.mem_bytes for n in gc.nodes)
    capacity = sum(d.mem_bytes for d in c.devices)
    if total_mem > capacity:
        raise InfeasibleMemoryError(total_mem, capacity)

    aug = augment(gc)
    mdl = MilpModel(aug, c, mesh, big_m(aug, c, mesh))
    ops = aug.op_ids
    flows = aug.flow_ids
    nodes = ops + flows
    closure = succ_closure(aug)

    def unrelated(a: int, b: int) -> bool:
        return b not in closure[a] and a not in closure[b]

    op_pairs = [(i, j) for ii, i in enumerate(ops) for j in ops[ii + 1:] if unrelated(i, j)]
    flow_pairs = [(q, r) for qi, q in enumerate(flows) for r in flows[qi + 1:] if unrelated(q, r)]
    pairs_kk = [(a, b) for a in devices for b in devices if a != b]

    # variables, in a fixed order so exports are reproducible
    for i in ops:
        for k in devices:
            mdl.x_idx[(i, k)] = mdl._new_var(f"x_{i}_{k}", True)
    for q in flows:
        mdl.z_idx[q] = mdl._new_var(f"z_{q}", True)
    for q in flows:
        for a, b in pairs_kk:
            mdl.u_idx[(q, a, b)] = mdl._new_var(f"u_{q}_{a}_{b}", True)
    for n in nodes:
        mdl.s_idx[n] = mdl._new_var(f"S_{n}", False)
    for n in nodes:
        mdl.c_idx[n] = mdl._new_var(f"C_{n}", False)
    for i, j in op_pairs:
        mdl.dord_idx[(i, j)] = mdl._new_var(f"dord_{i}_{j}", True)
    for q, r in flow_pairs:
        mdl.dcom_idx[(q, r)] = mdl._new_var(f"dcom_{q}_{r}", True)
    mdl.t_idx = mdl._new_var("T", False)

    ms, ml, mr = mdl.big_m.ms, mdl.big_m.ml, mdl.big_m.mr
    rows = mdl.rows

    # T dominates every op completion
    for i in ops:
        rows.append(_RowBuilder().add(1, mdl.c_idx[i]).add(-1, mdl.t_idx)
                    .row(f"objlink_{i}", "<=", 0.0))
    # precedence along augmented links
    for a, b in aug.links:
        rows.append(_RowBuilder().add(1, mdl.c_idx[a]).add(-1, mdl.s_idx[b])
                    .row(f"prec_{a}_{b}", "<=", 0.0))
    # op duration ties C to S through the chosen device
    for i in ops:
        rb = _RowBuilder().add(1, mdl.c_idx[i]).add(-1, mdl.s_idx[i])
        for k in devices:
            rb.add(-gc.node(i).compute_time[k], mdl.x_idx[(i, k)])
        rows.append(rb.row(f"dur_{i}", "=", 0.0))
    # each op runs on exactly one device
    for i in ops:
        rb = _RowBuilder()
        for k in devices:
            rb.add(1, mdl.x_idx[(i, k)])
        rows.append(rb.row(f"assign_{i}", "=", 1.0))
    # device memory
    for k in devices:
        rb = _RowBuilder()
        for i in ops:
            rb.add(gc.node(i).mem_bytes, mdl.x_idx[(i, k)])
        rows.append(rb.row(f"mem_{k}", "<=", float(c.device(k).mem_bytes)))
    # unrelated ops sharing a device must not overlap
    for i, j in op_pairs:
        d = mdl.dord_idx[(i, j)]
        for k in devices:
            xik, xjk = mdl.x_idx[(i, k)], mdl.x_idx[(j, k)]
            rows.append(_RowBuilder().add(1, mdl.c_idx[j]).add(-1, mdl.s_idx[i])
                        .add(-ms, d).add(ml, xik).add(ml, xjk)
                        .row(f"ord1_{i}_{j}_{k}", "<=", 2 * ml))
            rows.append(_RowBuilder().add(1, mdl.c_idx[i]).add(-1, mdl.s_idx[j])
                        .add(ms, d).add(ml, xik).add(ml, xjk)
                        .row(f"ord2_{i}_{j}_{k}", "<=", ms + 2 * ml))
    # flow crossing indicators and channel selection
    for q in flows:
        f = aug.flow_nodes[q]
        i, j = f.src, f.dst
        z = mdl.z_idx[q]
        for k in devices:
            xik, xjk = mdl.x_idx[(i, k)], mdl.x_idx[(j, k)]
            rows.append(_RowBuilder().add(1, xik).add(1, xjk).add(1, z)
                        .row(f"zcap_{q}_{k}", "<=", 2.0))
            rows.append(_RowBuilder().add(1, xik).add(-1, xjk).add(-1, z)
                        .row(f"zlo1_{q}_{k}", "<=", 0.0))
            rows.append(_RowBuilder().add(1, xjk).add(-1, xik).add(-1, z)
                        .row(f"zlo2_{q}_{k}", "<=", 0.0))
        rb = _RowBuilder()
        for a, b in pairs_kk:
            rb.add(1, mdl.u_idx[(q, a, b)])
        rb.add(-1, z)
        rows.append(rb.row(f"usum_{q}", "=", 0.0))
        for a, b in pairs_kk:
            rows.append(_RowBuilder().add(1, mdl.x_idx[(i, a)]).add(1, mdl.x_idx[(j, b)])
                        .add(-1, mdl.u_idx[(q, a, b)])
                        .row(f"uact_{q}_{a}_{b}", "<=", 1.0))
        rb = _RowBuilder().add(1, mdl.c_idx[q]).add(-1, mdl.s_idx[q])
        for a, b in pairs_kk:
            rb.add(-comm_time(f.payload_bytes, a, b, mesh), mdl.u_idx[(q, a, b)])
        rows.append(rb.row(f"fdur_{q}", "=", 0.0))
        rows.append(_RowBuilder().add(1, mdl.s_idx[q]).add(-1, mdl.c_idx[q])
                    .row(f"fwait_{q}", "<=", 0.0))
    # unrelated crossing flows sharing a source or destination device serialize
    for q, r in flow_pairs:
        fq, fr = aug.flow_nodes[q], aug.flow_nodes[r]
        a, b, cc, dd = fq.src, fq.dst, fr.src, fr.dst
        d = mdl.dcom_idx[(q, r)]
        zq, zr = mdl.z_idx[q], mdl.z_idx[r]
        for k in devices:
            xa, xb = mdl.x_idx[(a, k)], mdl.x_idx[(b, k)]
            xc, xd = mdl.x_idx[(cc, k)], mdl.x_idx[(dd, k)]
            for tag, sign in (("src", 1.0), ("dst", -1.0)):
                rows.append(_RowBuilder().add(1, mdl.c_idx[r]).add(-1, mdl.s_idx[q])
                            .add(-ms, d).add(ml, zq).add(ml, zr)
                            .add(sign * mr, xa).add(sign * mr, xc)
                            .add(-sign * mr, xb).add(-sign * mr, xd)
                            .row(f"con_{tag}1_{q}_{r}_{k}", "<=", 2 * ml + 2 * mr))
                rows.append(_RowBuilder().add(1, mdl.c_idx[q]).add(-1, mdl.s_idx[r])
                            .add(ms, d).add(ml, zq).add(ml, zr)
                            .add(sign * mr, xa).add(sign * mr, xc)
                            .add(-sign * mr, xb).add(-sign * mr, xd)
                            .row(f"con_{tag}2_{q}_{r}_{k}", "<=", ms + 2 * ml + 2 * mr))
    return mdl


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _format_terms(mdl: MilpModel, terms: tuple[tuple[float, int], ...]) -> str:
    parts: list[str] = []
    for coef, vi in terms:
        name = mdl.vars[vi].name
        mag = abs(coef)
        body = name if mag == 1.0 else f"{_num(mag)} {name}"
        if not parts:
            parts.append(body if coef > 0 else f"- {body}")
        else:
            parts.append(f"+ {body}" if coef > 0 else f"- {body}")
    return " ".join(parts)


def export_lp_text(mdl: MilpModel) -> str:
    """Render the model as LP-format text; byte-identical across runs."""
    lines = ["Minimize", f" obj: {mdl.objective_var}", "Subject To"]
    for row in mdl.rows:
        sense = "=" if row.sense == "=" else "<="
        lines.append(f" {row.name}: {_format_terms(mdl, row.terms)} {sense} {_num(row.rhs)}")
    binaries = [v.name for v in mdl.vars if v.binary]
    if binaries:
        lines.append("Binaries")
        for i in range(0, len(binaries), 8):
            lines.append(" " + " ".join(binaries[i:i + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(mdl: MilpModel, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(export_lp_text(mdl))


def extract_placement(mdl: MilpModel, values: Mapping[str, float]) -> Schedule:
    """Turn a solver's variable values into a checked Schedule.

    Binaries must sit within 1e-6 of 0/1 and every row must hold within
    1e-6 absolute; violations raise instead of producing a bogus answer.
    """
    by_index: list[float] = []
    for v in mdl.vars:
        if v.name not in values:
            raise KeyError(f"solver answer is missing variable {v.name}")
        by_index.append(float(values[v.name]))
    for v, val in zip(mdl.vars, by_index):
        if v.binary and abs(val - round(val)) > INT_TOL:
            raise NonIntegralError(v.name, val)
    for row in mdl.rows:
        lhs = sum(coef * by_index[vi] for coef, vi in row.terms)
        slack = abs(lhs - row.rhs) if row.sense == "=" else lhs - row.rhs
        if slack > ROW_TOL:
            raise ConstraintViolatedError(row.name, slack)

    aug = mdl.aug
    assignment: dict[int, int] = {}
    for i in aug.op_ids:
        for k in mdl.cluster.device_ids:
            if by_index[mdl.x_idx[(i, k)]] > 0.5:
                assignment[i] = k
                break
    starts = {n: by_index[mdl.s_idx[n]] for n in aug.node_ids}
    ends = {n: by_index[mdl.c_idx[n]] for n in aug.node_ids}
    channels: dict[int, tuple[int, int] | None] = {}
    for q in aug.flow_ids:
        channels[q] = None
        if by_index[mdl.z_idx[q]] > 0.5:
            for (qq, a, b), vi in mdl.u_idx.items():
                if qq == q and by_index[vi] > 0.5:
                    channels[q] = (a, b)
                    break
    makespan = max(ends[i] for i in aug.op_ids)
    return Schedule(assignment, starts, ends, channels, makespan)
