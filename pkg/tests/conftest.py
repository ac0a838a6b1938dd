"""Shared instance builders for the test suite.

Everything here is deterministic: fixed instances are spelled out
literally and randomized ones take the caller's random.Random so each
test controls its own seeds.
"""

from __future__ import annotations

import random

from opplace import (
    BaselineKind,
    Cluster,
    CompGraph,
    Device,
    FlowEdge,
    FusionRule,
    FusionRuleSet,
    OpNode,
    effective_bandwidth,
)

OP_TYPES = ("conv", "bn", "relu", "add", "matmul", "pool")


def table_rules() -> FusionRuleSet:
    """The conv-rooted rule family used across the suite."""
    return FusionRuleSet([
        FusionRule(1, ("conv", "bn")),
        FusionRule(2, ("conv", "bn", "relu")),
        FusionRule(3, ("conv", "bn", "add", "relu")),
    ])


def two_device_cluster(mem: int = 100, bw: float = 5e6) -> Cluster:
    return Cluster([Device(0, mem), Device(1, mem)],
                   {(0, 1): bw, (1, 0): bw})


def two_op_chain() -> tuple[CompGraph, Cluster]:
    """conv -> bn, 10 MB apart, 5 MB/s links; optimum is 3 s on device 0."""
    g = CompGraph(
        [OpNode(1, "conv", 10, {0: 2.0, 1: 4.0}),
         OpNode(2, "bn", 10, {0: 1.0, 1: 0.5})],
        [FlowEdge(1, 2, 10_000_000)],
    )
    return g, two_device_cluster()


def split_chain() -> tuple[CompGraph, Cluster]:
    """Each device is hopeless for one op, so the optimum pays the
    transfer: 2 s + 20 s + 3 s = 25 s."""
    g = CompGraph(
        [OpNode(1, "conv", 10, {0: 2.0, 1: 100.0}),
         OpNode(2, "bn", 10, {0: 100.0, 1: 3.0})],
        [FlowEdge(1, 2, 100_000_000)],
    )
    return g, two_device_cluster()


def skewed_pair() -> tuple[CompGraph, Cluster]:
    """Two ops whose locally best devices disagree, with a transfer so
    expensive that following the first op's affinity is a trap."""
    g = CompGraph(
        [OpNode(1, "matmul", 1, {1: 1.0, 2: 3.0}),
         OpNode(2, "matmul", 1, {1: 10.0, 2: 1.0})],
        [FlowEdge(1, 2, 100_000_000)],
    )
    c = Cluster([Device(1, 100), Device(2, 100)],
                {(1, 2): 5e6, (2, 1): 5e6})
    return g, c


def relay_cluster() -> Cluster:
    """Three devices in a line; endpoint pairs only talk through the
    middle one."""
    return Cluster(
        [Device(1, 100), Device(2, 100), Device(3, 100)],
        {(1, 2): 1e7, (2, 1): 1e7, (2, 3): 5e6, (3, 2): 5e6},
    )


def residual_block() -> CompGraph:
    """Two-branch block: a main path and a conv shortcut joining at an
    add, with conv/bn pairs on both branches.

    Coarsening with table_rules() must fuse the main branch's
    conv,bn,add,relu run and the shortcut's conv,bn pair while the
    leading elementwise ops stay as they are.
    """
    types = {1: "add", 2: "relu", 3: "add", 4: "relu", 5: "add",
             6: "relu", 7: "conv", 8: "bn", 9: "conv", 10: "bn"}
    nodes = [OpNode(i, t, 10 * i, {0: float(i), 1: float(i) + 0.5})
             for i, t in sorted(types.items())]
    edges = [FlowEdge(a, b, 1000 * (10 * a + b)) for a, b in
             [(1, 2), (2, 3), (3, 4), (4, 9), (9, 10),
              (10, 5), (5, 6), (1, 7), (7, 8), (8, 5)]]
    return CompGraph(nodes, edges)


def chain_graph(n: int, op_type: str = "matmul",
                time_s: float = 1.0, payload: int = 1_000_000) -> CompGraph:
    nodes = [OpNode(i, op_type, 1, {0: time_s, 1: time_s})
             for i in range(1, n + 1)]
    edges = [FlowEdge(i, i + 1, payload) for i in range(1, n)]
    return CompGraph(nodes, edges)


def random_dag(rng: random.Random, max_ops: int = 10,
               devices: tuple[int, ...] = (0, 1)) -> CompGraph:
    """Layer-free random DAG; edges only point to higher ids."""
    n = rng.randint(2, max_ops)
    nodes = [OpNode(i, rng.choice(OP_TYPES), rng.randint(1, 20),
                    {k: round(rng.uniform(0.5, 8.0), 3) for k in devices})
             for i in range(1, n + 1)]
    edges = []
    for j in range(2, n + 1):
        preds = [i for i in range(1, j) if rng.random() < 0.4]
        if not preds and rng.random() < 0.8:
            preds = [rng.randint(1, j - 1)]
        for i in preds:
            edges.append(FlowEdge(i, j, rng.randint(1_000_000, 30_000_000)))
    return CompGraph(nodes, edges)


def random_instance(rng: random.Random, max_ops: int = 6,
                    tight_ok: bool = True,
                    min_ops: int = 2) -> tuple[CompGraph, Cluster]:
    """Small random placement instance.

    With tight_ok a fraction of draws put real pressure on device memory
    so infeasible and near-full cases stay covered.
    """
    n = rng.randint(min_ops, max_ops)
    k = rng.randint(2, 3)
    tight = tight_ok and rng.random() < 0.4
    mem_hi = 40 if tight else 10
    cap = 80 if tight else 100
    nodes = [OpNode(i, rng.choice(OP_TYPES), rng.randint(1, mem_hi),
                    {d: round(rng.uniform(0.5, 8.0), 3) for d in range(k)})
             for i in range(1, n + 1)]
    edges = []
    for j in range(2, n + 1):
        preds = [i for i in range(1, j) if rng.random() < 0.5]
        if not preds and rng.random() < 0.8:
            preds = [rng.randint(1, j - 1)]
        for i in preds:
            edges.append(FlowEdge(i, j, rng.randint(1_000_000, 30_000_000)))
    g = CompGraph(nodes, edges)
    links = {(a, b): rng.uniform(4e6, 4e7)
             for a in range(k) for b in range(k) if a != b}
    c = Cluster([Device(d, cap) for d in range(k)], links)
    return g, c


def greedy_kinds() -> tuple[BaselineKind, BaselineKind]:
    return (BaselineKind.EARLIEST_FINISH, BaselineKind.EARLIEST_START)


def mesh_for(c: Cluster):
    return effective_bandwidth(c)
