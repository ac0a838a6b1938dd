"""Operator fusion: rule matching and graph coarsening.

Chains of ops whose type sequence completes a fusion rule are folded into
single nodes before placement.  A pair that only completes a *prefix* of a
longer rule is kept "bound" so the chain can keep growing (maximal munch);
after the traversal, bound remnants settle at the longest rule their
member sequence actually completes, or dissolve back into their parts.

Only edges whose producer has a single consumer may fuse: forks would
either duplicate the producer or create artificial sync points.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .errors import CycleCreationError, UnknownEdgeError
from .graph import CompGraph, FlowEdge, OpNode, Tag, validate_dag
from .profiles import CostOverrides

FUSE_JOINER = "∘"  # ring operator between member types in display names


class ConnKind(Enum):
    DIRECT = "direct"
    MULTI_OUTPUTS = "multi_outputs"
    MULTI_INPUTS = "multi_inputs"


@dataclass(frozen=True)
class FusionRule:
    """An op-type sequence that may be collapsed into one kernel."""

    id: int
    pattern: tuple[str, ...]

    def __post_init__(self):
        if len(self.pattern) < 2:
            raise ValueError(f"rule {self.id}: pattern needs at least two op types")
        if not all(self.pattern):
            raise ValueError(f"rule {self.id}: empty op type in pattern")


class FusionRuleSet:
    """Validated collection of fusion rules with unique ids."""

    def __init__(self, rules: Iterable[FusionRule]):
        self.rules = list(rules)
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate rule ids")
        self._patterns = {r.pattern for r in self.rules}

    def has_pattern(self, seq: tuple[str, ...]) -> bool:
        return seq in self._patterns

    def __iter__(self) -> Iterator[FusionRule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


class MatchKind(Enum):
    FULL = "full"
    PREFIX = "prefix"


@dataclass(frozen=True)
class Match:
    kind: MatchKind
    rule_id: int


def classify_connection(g: CompGraph, src: int, dst: int) -> ConnKind:
    """Classify edge (src, dst) by the endpoint degrees."""
    if g.edge(src, dst) is None:
        raise UnknownEdgeError(src, dst)
    if g.out_degree(src) > 1:
        return ConnKind.MULTI_OUTPUTS
    if g.in_degree(dst) > 1:
        return ConnKind.MULTI_INPUTS
    return ConnKind.DIRECT


def is_valid_conn(g: CompGraph, src: int, dst: int) -> bool:
    """Fusable connections: direct and multi-inputs, never multi-outputs."""
    return classify_connection(g, src, dst) is not ConnKind.MULTI_OUTPUTS


def _match_seqs(pred_seq: tuple[str, ...], succ_seq: tuple[str, ...],
                rules: FusionRuleSet) -> Match | None:
    t = pred_seq + succ_seq
    n = len(t)
    # strict-prefix matches win over full ones: keep the chain extensible
    prefix_ids = [r.id for r in rules if n < len(r.pattern) and r.pattern[:n] == t]
    if prefix_ids:
        return Match(MatchKind.PREFIX, min(prefix_ids))
    full_ids = [r.id for r in rules if r.pattern == t]
    if full_ids:
        return Match(MatchKind.FULL, min(full_ids))
    return None


def match_rule(pred: OpNode, succ: OpNode, rules: FusionRuleSet) -> Match | None:
    """Match the concatenated member type sequences of two nodes.

    Returns a full match when the sequence equals a rule pattern, a prefix
    match when it is a strict prefix of one, preferring prefix when both
    apply, and None otherwise.
    """
    return _match_seqs(pred.type_seq, succ.type_seq, rules)


def _combined_cost(parts: list[OpNode], seq: tuple[str, ...],
                   overrides: CostOverrides | None) -> dict[int, float]:
    """Per-device time of a fused node: profile override, else member sum."""
    common = set(parts[0].compute_time)
    for p in parts[1:]:
        common &= set(p.compute_time)
    devices = set(common)
    if overrides is not None:
        devices |= overrides.devices_for(seq)
    cost: dict[int, float] = {}
    for k in sorted(devices):
        ov = overrides.get(seq, k) if overrides is not None else None
        cost[k] = ov if ov is not None else sum(p.compute_time[k] for p in parts)
    return cost


class _Coarsener:
    """Mutable partition of the input nodes plus the quotient adjacency.

    Group ids are always the minimum input node id of the group, so stale
    ids resolve through ``where``.  Quotient edges are recomputed from the
    input edges at materialization, which also makes unbinding a pure
    partition refinement.
    """

    def __init__(self, g: CompGraph, overrides: CostOverrides | None):
        self.g = g
        self.overrides = overrides
        self.parts: dict[int, list[int]] = {i: [i] for i in g.node_ids}
        self.where: dict[int, int] = {i: i for i in g.node_ids}
        self.tags: dict[int, Tag] = {i: g.node(i).tag for i in g.node_ids}
        self.seqs: dict[int, tuple[str, ...]] = {i: g.node(i).type_seq for i in g.node_ids}
        self.out: dict[int, set[int]] = {i: set() for i in g.node_ids}
        self.inn: dict[int, set[int]] = {i: set() for i in g.node_ids}
        for e in g.edges:
            self.out[e.src].add(e.dst)
            self.inn[e.dst].add(e.src)

    def creates_cycle(self, a: int, b: int) -> bool:
        """True when a path a ~> b exists besides the direct edge."""
        frontier = [n for n in self.out[a] if n != b]
        seen = set(frontier)
        while frontier:
            n = frontier.pop()
            if n == b:
                return True
            for m in self.out[n]:
                if m not in seen:
                    seen.add(m)
                    frontier.append(m)
        return False

    def combine(self, a: int, b: int, tag: Tag) -> int:
        """Merge group b into group a (an edge a -> b must exist)."""
        new, old = min(a, b), max(a, b)
        parts = self.parts[a] + self.parts[b]
        seq = self.seqs[a] + self.seqs[b]
        out = (self.out[a] | self.out[b]) - {a, b}
        inn = (self.inn[a] | self.inn[b]) - {a, b}
        for gid in (a, b):
            for n in self.out[gid]:
                self.inn[n].discard(gid)
            for n in self.inn[gid]:
                self.out[n].discard(gid)
        del self.parts[old], self.seqs[old], self.tags[old], self.out[old], self.inn[old]
        self.parts[new], self.seqs[new], self.tags[new] = parts, seq, tag
        self.out[new], self.inn[new] = out, inn
        for n in out:
            self.inn[n].add(new)
        for n in inn:
            self.out[n].add(new)
        for nid in parts:
            self.where[nid] = new
        return new

    def snapshot_groups(self) -> list[tuple[list[int], Tag]]:
        return [(list(self.parts[gid]), self.tags[gid]) for gid in sorted(self.parts)]

    def final_partition(self, rules: FusionRuleSet) -> list[tuple[list[int], Tag]]:
        """Resolve bound groups: keep the longest rule-complete prefix, release the rest."""
        groups: list[tuple[list[int], Tag]] = []
        for gid in sorted(self.parts):
            part_ids = self.parts[gid]
            tag = self.tags[gid]
            if tag is not Tag.BOUND:
                groups.append((list(part_ids), tag))
                continue
            # prefixes may only split at input-node boundaries
            best_k = 0
            pos = 0
            seq = self.seqs[gid]
            for k, nid in enumerate(part_ids, start=1):
                pos += len(self.g.node(nid).type_seq)
                if rules.has_pattern(seq[:pos]):
                    best_k = k
            kept, rest = part_ids[:best_k], part_ids[best_k:]
            if len(kept) >= 2:
                groups.append((list(kept), Tag.FUSED))
            elif len(kept) == 1:
                groups.append(([kept[0]], self.g.node(kept[0]).tag))
            for nid in rest:
                groups.append(([nid], self.g.node(nid).tag))
        return groups

    def materialize(self, groups: list[tuple[list[int], Tag]]) -> CompGraph:
        """Build the output graph: one node per group, input edges quotiented.

        Edges between the same group pair collapse into one, payloads
        summed; internal edges vanish.
        """
        where: dict[int, int] = {}
        out_nodes: list[OpNode] = []
        for part_ids, tag in groups:
            gid = min(part_ids)
            for nid in part_ids:
                where[nid] = gid
            if len(part_ids) == 1:
                out_nodes.append(self.g.node(part_ids[0]))
                continue
            parts = [self.g.node(nid) for nid in part_ids]
            members = tuple(m for p in parts for m in p.members)
            seq = tuple(t for p in parts for t in p.type_seq)
            mem = sum(p.mem_bytes for p in parts)
            cost = _combined_cost(parts, seq, self.overrides)
            out_nodes.append(OpNode(gid, FUSE_JOINER.join(seq), mem, cost, members, seq, tag))
        payload: dict[tuple[int, int], int] = {}
        for e in self.g.edges:
            gu, gv = where[e.src], where[e.dst]
            if gu != gv:
                payload[(gu, gv)] = payload.get((gu, gv), 0) + e.payload_bytes
        edges = [FlowEdge(u, v, payload[(u, v)]) for (u, v) in sorted(payload)]
        return CompGraph(sorted(out_nodes, key=lambda n: n.id), edges)


def fuse(g: CompGraph, pred: int, succ: int,
         overrides: CostOverrides | None = None) -> tuple[CompGraph, OpNode]:
    """Fuse one edge, returning the new graph and the merged node.

    The merged node takes the union of both endpoints' external edges,
    concatenated members, summed memory, and summed (or overridden)
    compute times.  Raises when the edge is missing or when another
    pred ~> succ path would close a cycle.
    """
    if g.edge(pred, succ) is None:
        raise UnknownEdgeError(pred, succ)
    validate_dag(g)
    co = _Coarsener(g, overrides)
    if co.creates_cycle(pred, succ):
        raise CycleCreationError(pred, succ)
    gid = co.combine(pred, succ, Tag.FUSED)
    out = co.materialize(co.snapshot_groups())
    return out, out.node(gid)


def gcof(g: CompGraph, rules: FusionRuleSet,
         overrides: CostOverrides | None = None) -> CompGraph:
    """Coarsen a graph by greedy fusion along a deterministic DFS.

    From each source (ascending id) the walk repeatedly tries to extend the
    current node with its sole consumer: a full rule match fuses, a prefix
    match binds, anything else stops the chain.  Multi-output producers
    never fuse.  Afterwards bound remnants are finalized or released; the
    result is a DAG over the same member multiset.
    """
    validate_dag(g)
    co = _Coarsener(g, overrides)
    visited: set[int] = set()
    for s in sorted(i for i in g.node_ids if g.in_degree(i) == 0):
        stack = [s]
        while stack:
            cur = co.where[stack.pop()]
            if cur in visited:
                continue
            while True:
                outs = co.out[cur]
                if len(outs) != 1:
                    break  # a fork downstream of cur: no fusable edge
                (nxt,) = outs
                m = _match_seqs(co.seqs[cur], co.seqs[nxt], rules)
                if m is None or co.creates_cycle(cur, nxt):
                    break
                tag = Tag.BOUND if m.kind is MatchKind.PREFIX else Tag.FUSED
                cur = co.combine(cur, nxt, tag)
            visited.add(cur)
            for nxt in sorted(co.out[cur], reverse=True):
                if nxt not in visited:
                    stack.append(nxt)
    return co.materialize(co.final_partition(rules))
