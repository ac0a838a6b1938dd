"""Operator-graph data model.

A computation is a DAG of typed ops with per-device compute times; every
edge carries a payload in bytes.  For placement the graph is augmented:
each edge becomes an explicit flow node so that transfers can be scheduled
as first-class tasks.
"""

from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .errors import CycleError, DanglingEdgeError

log = logging.getLogger(__name__)


class Tag(str, Enum):
    """Lifecycle tag of an op node under fusion."""

    PLAIN = "plain"
    FUSED = "fused"
    BOUND = "bound"


@dataclass(frozen=True)
class OpNode:
    """One schedulable operator.

    ``members`` lists the original op ids folded into this node (itself for
    a plain op) and ``type_seq`` the member op types in fusion order; both
    default to the singleton for plain nodes.
    """

    id: int
    op_type: str
    mem_bytes: int
    compute_time: Mapping[int, float]
    members: tuple[int, ...] = ()
    type_seq: tuple[str, ...] = ()
    tag: Tag = Tag.PLAIN

    def __post_init__(self):
        if not self.members:
            object.__setattr__(self, "members", (self.id,))
        if not self.type_seq:
            object.__setattr__(self, "type_seq", (self.op_type,))
        if self.mem_bytes < 0:
            raise ValueError(f"op {self.id}: mem_bytes must be >= 0")
        if len(set(self.members)) != len(self.members):
            raise ValueError(f"op {self.id}: duplicate member ids")
        if len(self.type_seq) != len(self.members):
            raise ValueError(f"op {self.id}: type_seq and members differ in length")
        for k, t in self.compute_time.items():
            if t < 0:
                raise ValueError(f"op {self.id}: negative compute time on device {k}")


@dataclass(frozen=True)
class FlowEdge:
    """A directed data dependency carrying ``payload_bytes``."""

    src: int
    dst: int
    payload_bytes: int

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"self edge on node {self.src}")
        if self.payload_bytes < 0:
            raise ValueError(f"edge ({self.src}, {self.dst}): negative payload")


class CompGraph:
    """Immutable operator DAG.

    Node ids are unique, edge endpoints must exist, and at most one edge may
    connect an ordered node pair.  Acyclicity is checked by
    :func:`validate_dag`, not at construction.
    """

    def __init__(self, nodes: Iterable[OpNode], edges: Iterable[FlowEdge]):
        self._nodes: dict[int, OpNode] = {}
        for n in nodes:
            if n.id in self._nodes:
                raise ValueError(f"duplicate node id {n.id}")
            self._nodes[n.id] = n
        self._edges: list[FlowEdge] = []
        self._edge_map: dict[tuple[int, int], FlowEdge] = {}
        self._succs: dict[int, list[int]] = {i: [] for i in self._nodes}
        self._preds: dict[int, list[int]] = {i: [] for i in self._nodes}
        for e in edges:
            for endpoint in (e.src, e.dst):
                if endpoint not in self._nodes:
                    raise DanglingEdgeError(e.src, e.dst, endpoint)
            if (e.src, e.dst) in self._edge_map:
                raise ValueError(f"parallel edge ({e.src}, {e.dst})")
            self._edges.append(e)
            self._edge_map[(e.src, e.dst)] = e
            self._succs[e.src].append(e.dst)
            self._preds[e.dst].append(e.src)
        for adj in (self._succs, self._preds):
            for lst in adj.values():
                lst.sort()

    @property
    def node_ids(self) -> list[int]:
        return sorted(self._nodes)

    @property
    def nodes(self) -> list[OpNode]:
        return [self._nodes[i] for i in self.node_ids]

    @property
    def edges(self) -> list[FlowEdge]:
        return list(self._edges)

    def node(self, nid: int) -> OpNode:
        return self._nodes[nid]

    def has_node(self, nid: int) -> bool:
        return nid in self._nodes

    def edge(self, src: int, dst: int) -> FlowEdge | None:
        return self._edge_map.get((src, dst))

    def succs(self, nid: int) -> list[int]:
        return self._succs[nid]

    def preds(self, nid: int) -> list[int]:
        return self._preds[nid]

    def out_degree(self, nid: int) -> int:
        return len(self._succs[nid])

    def in_degree(self, nid: int) -> int:
        return len(self._preds[nid])

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[OpNode]:
        return iter(self.nodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompGraph):
            return NotImplemented
        return self._nodes == other._nodes and set(self._edges) == set(other._edges)

    def __repr__(self) -> str:
        return f"CompGraph(nodes={len(self._nodes)}, edges={len(self._edges)})"


@dataclass(frozen=True)
class FlowNode:
    """A transfer task standing in for one edge of the source graph."""

    id: int
    src: int
    dst: int
    payload_bytes: int


class AugGraph:
    """Augmented graph: ops plus one flow node per source edge.

    Each source edge (i, j) becomes op i -> flow q -> op j, with two
    unweighted links replacing the weighted edge.  Flow ids continue past
    the largest op id, in source edge order.
    """

    def __init__(self, source: CompGraph):
        self.source = source
        self.op_ids: list[int] = source.node_ids
        self.flow_nodes: dict[int, FlowNode] = {}
        self.links: list[tuple[int, int]] = []
        self._succs: dict[int, list[int]] = {i: [] for i in self.op_ids}
        self._preds: dict[int, list[int]] = {i: [] for i in self.op_ids}
        self.flow_of_edge: dict[tuple[int, int], int] = {}
        next_id = max(self.op_ids, default=0)
        for e in source.edges:
            next_id += 1
            q = next_id
            self.flow_nodes[q] = FlowNode(q, e.src, e.dst, e.payload_bytes)
            self.flow_of_edge[(e.src, e.dst)] = q
            self._succs[q] = []
            self._preds[q] = []
            for a, b in ((e.src, q), (q, e.dst)):
                self.links.append((a, b))
                self._succs[a].append(b)
                self._preds[b].append(a)
        for adj in (self._succs, self._preds):
            for lst in adj.values():
                lst.sort()

    @property
    def flow_ids(self) -> list[int]:
        return sorted(self.flow_nodes)

    @property
    def node_ids(self) -> list[int]:
        return self.op_ids + self.flow_ids

    def is_op(self, nid: int) -> bool:
        return nid not in self.flow_nodes

    def succs(self, nid: int) -> list[int]:
        return self._succs[nid]

    def preds(self, nid: int) -> list[int]:
        return self._preds[nid]

    def __repr__(self) -> str:
        return f"AugGraph(ops={len(self.op_ids)}, flows={len(self.flow_nodes)})"


# A successor closure maps every node id to the set of its strict descendants.
SuccClosure = dict[int, frozenset]


def _adjacency(g: CompGraph | AugGraph) -> tuple[list[int], dict[int, list[int]]]:
    if isinstance(g, AugGraph):
        ids = g.node_ids
        return ids, {i: g.succs(i) for i in ids}
    ids = g.node_ids
    return ids, {i: g.succs(i) for i in ids}


def _find_cycle(ids: list[int], succs: dict[int, list[int]]) -> list[int]:
    """Return one directed cycle as a node list (guaranteed to exist)."""
    color = {i: 0 for i in ids}  # 0 white, 1 on stack, 2 done
    parent: dict[int, int] = {}
    for root in ids:
        if color[root]:
            continue
        stack = [(root, iter(succs[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 0:
                    color[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(succs[nxt])))
                    advanced = True
                    break
                if color[nxt] == 1:
                    cycle = [nxt]
                    cur = node
                    while cur != nxt:
                        cycle.append(cur)
                        cur = parent[cur]
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[node] = 2
                stack.pop()
    raise AssertionError("no cycle found in a graph reported cyclic")


def validate_dag(g: CompGraph) -> None:
    """Check acyclicity, raising :class:`CycleError` with a witness cycle.

    Weak connectivity is not required; a disconnected graph only logs a
    warning.
    """
    ids, succs = _adjacency(g)
    indeg = {i: 0 for i in ids}
    for i in ids:
        for j in succs[i]:
            indeg[j] += 1
    queue = deque(i for i in ids if indeg[i] == 0)
    seen = 0
    while queue:
        i = queue.popleft()
        seen += 1
        for j in succs[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if seen != len(ids):
        raise CycleError(_find_cycle(ids, succs))
    if ids and isinstance(g, CompGraph):
        comp = {ids[0]}
        frontier = deque([ids[0]])
        while frontier:
            i = frontier.popleft()
            for j in list(g.succs(i)) + list(g.preds(i)):
                if j not in comp:
                    comp.add(j)
                    frontier.append(j)
        if len(comp) != len(ids):
            log.warning("graph is not weakly connected (%d of %d nodes in one component)",
                        len(comp), len(ids))


def topo_order(g: CompGraph | AugGraph) -> list[int]:
    """Kahn topological order with ties broken by ascending node id."""
    ids, succs = _adjacency(g)
    indeg = {i: 0 for i in ids}
    for i in ids:
        for j in succs[i]:
            indeg[j] += 1
    ready = [i for i in ids if indeg[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in succs[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != len(ids):
        raise CycleError(_find_cycle(ids, succs))
    return order


def succ_closure(g: CompGraph | AugGraph) -> SuccClosure:
    """Map every node to the frozenset of its strict descendants."""
    ids, succs = _adjacency(g)
    order = topo_order(g)
    closure: dict[int, frozenset] = {}
    for i in reversed(order):
        acc: set = set()
        for j in succs[i]:
            acc.add(j)
            acc |= closure[j]
        closure[i] = frozenset(acc)
    return closure


def augment(g: CompGraph) -> AugGraph:
    """Insert one flow node per edge; raises on cyclic input."""
    topo_order(g)  # cycle check
    return AugGraph(g)


def contract(aug: AugGraph) -> CompGraph:
    """Collapse every flow node back into a weighted edge.

    Inverse of :func:`augment`: the result equals the source graph.
    """
    edges = [FlowEdge(f.src, f.dst, f.payload_bytes)
             for f in (aug.flow_nodes[q] for q in aug.flow_ids)]
    return CompGraph(aug.source.nodes, edges)
