"""Seeded synthetic workload generation.

Graphs are layered DAGs with forward edges only.  A density knob controls
how often the generator plants a fusible run: a chain of single-consumer
nodes typed after one of the registered patterns, which the coarsener can
later collapse.  Everything is drawn from one random.Random(seed), so a
given (spec, seed) pair always yields the same graph, byte for byte.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .graph import CompGraph, FlowEdge, OpNode

# runs the generator may plant; mirrors the default fusion rule table
PATTERNS = (
    ("conv", "bn"),
    ("conv", "bn", "relu"),
    ("conv", "bn", "add", "relu"),
)

PLAIN_TYPES = ("matmul", "pool", "concat", "embed", "softmax", "add", "relu")


@dataclass(frozen=True)
class GenSpec:
    """Shape and cost ranges for one synthetic graph."""

    ops: int
    width: int
    density: float
    devices: tuple[int, ...]
    time_range_s: tuple[float, float] = (0.5, 8.0)
    payload_range: tuple[int, int] = (1_000_000, 64_000_000)
    mem_range: tuple[int, int] = (1_000_000, 256_000_000)
    max_fanout: int = 3
    patterns: tuple[tuple[str, ...], ...] = PATTERNS

    def __post_init__(self):
        if self.ops < 1:
            raise ValueError("ops must be >= 1")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError("density must be in [0, 1]")
        if not self.devices:
            raise ValueError("at least one device id is required")
        for lo, hi, what in ((*self.time_range_s, "time"),
                             (*self.payload_range, "payload"),
                             (*self.mem_range, "mem")):
            if lo <= 0 or hi < lo:
                raise ValueError(f"bad {what} range ({lo}, {hi})")
        if self.max_fanout < 1:
            raise ValueError("max_fanout must be >= 1")
        if not self.patterns or any(not p for p in self.patterns):
            raise ValueError("patterns must be nonempty sequences")


def gen_synthetic(spec: GenSpec, seed: int) -> CompGraph:
    """Generate one layered DAG, deterministic per (spec, seed)."""
    rng = random.Random(seed)

    layers: list[list[int]] = []
    next_id = 1
    remaining = spec.ops
    while remaining:
        size = min(remaining, rng.randint(1, spec.width))
        layers.append(list(range(next_id, next_id + size)))
        next_id += size
        remaining -= size
    layer_of = {v: li for li, layer in enumerate(layers) for v in layer}

    # typing pass: planted pattern runs force a type and a single forward
    # edge on each node of the run, so the run survives as a fusible chain
    forced: dict[int, tuple[str, tuple[str, ...]]] = {}
    forced_edge: dict[int, int] = {}
    op_type: dict[int, str] = {}
    for li, layer in enumerate(layers):
        for v in layer:
            if v in forced:
                t, rem = forced[v]
            elif rng.random() < spec.density:
                pat = spec.patterns[rng.randrange(len(spec.patterns))]
                t, rem = pat[0], pat[1:]
            else:
                t, rem = rng.choice(PLAIN_TYPES), ()
            op_type[v] = t
            if rem and li + 1 < len(layers):
                free = [w for w in layers[li + 1] if w not in forced]
                if free:
                    w = rng.choice(free)
                    forced[w] = (rem[0], rem[1:])
                    forced_edge[v] = w

    edge_set: set[tuple[int, int]] = set()
    edge_order: list[tuple[int, int]] = []

    def add_edge(a: int, b: int):
        edge_set.add((a, b))
        edge_order.append((a, b))

    for li, layer in enumerate(layers[:-1]):
        nxt = layers[li + 1]
        for v in layer:
            if v in forced_edge:
                add_edge(v, forced_edge[v])
                continue
            fan = rng.randint(1, min(spec.max_fanout, len(nxt)))
            for w in sorted(rng.sample(nxt, fan)):
                add_edge(v, w)

    # best-effort: connect stranded mid-graph sources to an earlier layer
    for li, layer in enumerate(layers[1:], start=1):
        for w in layer:
            if any((u, w) in edge_set for u in range(1, w)):
                continue
            pool = [u for u in range(1, layers[li][0])
                    if u not in forced_edge and layer_of[u] < li
                    and (u, w) not in edge_set]
            if pool:
                add_edge(rng.choice(pool), w)

    lo_t, hi_t = spec.time_range_s
    nodes = []
    for v in range(1, spec.ops + 1):
        times = {k: math.exp(rng.uniform(math.log(lo_t), math.log(hi_t)))
                 for k in spec.devices}
        mem = rng.randint(*spec.mem_range)
        nodes.append(OpNode(v, op_type[v], mem, times))

    edges = [FlowEdge(a, b, rng.randint(*spec.payload_range))
             for a, b in edge_order]
    return CompGraph(nodes, edges)
