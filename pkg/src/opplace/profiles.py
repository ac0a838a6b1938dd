"""Device clusters, effective bandwidth, and profiled costs.

Physically linked devices form a sparse directed graph; placement wants a
full mesh, so each ordered pair gets the best bottleneck bandwidth over
any path (transfers are only throttled by their narrowest hop).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DisconnectedClusterError, MissingProfileError
from .graph import OpNode


@dataclass(frozen=True)
class Device:
    id: int
    mem_bytes: int

    def __post_init__(self):
        if self.mem_bytes <= 0:
            raise ValueError(f"device {self.id}: mem_bytes must be positive")


class Cluster:
    """Devices plus directed physical links (bytes/sec).

    Links are directional so asymmetric up/down bandwidth is expressible.
    The undirected link graph must be connected; directed reachability is
    checked when the mesh is derived.
    """

    def __init__(self, devices: Iterable[Device], links: Mapping[tuple[int, int], float]):
        self.devices = sorted(devices, key=lambda d: d.id)
        ids = [d.id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate device ids")
        self._by_id = {d.id: d for d in self.devices}
        self.links = dict(links)
        for (a, b), bw in self.links.items():
            if a == b:
                raise ValueError(f"self link on device {a}")
            if a not in self._by_id or b not in self._by_id:
                raise ValueError(f"link ({a}, {b}) references unknown device")
            if bw <= 0:
                raise ValueError(f"link ({a}, {b}): bandwidth must be positive")
        self._check_connected()

    def _check_connected(self):
        if len(self.devices) <= 1:
            return
        undirected: dict[int, set[int]] = {d.id: set() for d in self.devices}
        for a, b in self.links:
            undirected[a].add(b)
            undirected[b].add(a)
        start = self.devices[0].id
        seen = {start}
        frontier = [start]
        while frontier:
            for n in undirected[frontier.pop()]:
                if n not in seen:
                    seen.add(n)
                    frontier.append(n)
        missing = [d.id for d in self.devices if d.id not in seen]
        if missing:
            raise DisconnectedClusterError([(start, m) for m in missing])

    @property
    def device_ids(self) -> list[int]:
        return [d.id for d in self.devices]

    def device(self, k: int) -> Device:
        return self._by_id[k]

    def __len__(self) -> int:
        return len(self.devices)


class EffectiveMesh:
    """Total map of best bottleneck bandwidth for every ordered device pair."""

    def __init__(self, device_ids: Iterable[int], bw: Mapping[tuple[int, int], float]):
        self.device_ids = sorted(device_ids)
        self.bw = dict(bw)
        missing = [(a, b) for a in self.device_ids for b in self.device_ids
                   if a != b and (a, b) not in self.bw]
        if missing:
            raise DisconnectedClusterError(missing)

    def bandwidth(self, src: int, dst: int) -> float:
        return self.bw[(src, dst)]


def effective_bandwidth(c: Cluster) -> EffectiveMesh:
    """Widest-path sweep: maximize the minimum link bandwidth per pair.

    Dijkstra with a max-heap keyed on bottleneck so far; raises when any
    ordered pair is unreachable along directed links.
    """
    out: dict[int, list[tuple[int, float]]] = {k: [] for k in c.device_ids}
    for (a, b), bw in c.links.items():
        out[a].append((b, bw))
    best: dict[tuple[int, int], float] = {}
    unreachable: list[tuple[int, int]] = []
    for src in c.device_ids:
        bottleneck = {src: float("inf")}
        heap = [(-float("inf"), src)]
        while heap:
            neg, node = heapq.heappop(heap)
            width = -neg
            if width < bottleneck.get(node, 0.0):
                continue
            for nxt, bw in out[node]:
                cand = min(width, bw)
                if cand > bottleneck.get(nxt, 0.0):
                    bottleneck[nxt] = cand
                    heapq.heappush(heap, (-cand, nxt))
        for dst in c.device_ids:
            if dst == src:
                continue
            if dst in bottleneck:
                best[(src, dst)] = bottleneck[dst]
            else:
                unreachable.append((src, dst))
    if unreachable:
        raise DisconnectedClusterError(unreachable)
    return EffectiveMesh(c.device_ids, best)


def comm_time(payload_bytes: int, src: int, dst: int, mesh: EffectiveMesh) -> float:
    """Seconds to move a payload between devices; free when co-located."""
    if src == dst:
        return 0.0
    return payload_bytes / mesh.bandwidth(src, dst)


class CostOverrides:
    """Profiled times for fused kernels, keyed by (type sequence, device).

    When a fused node's member sequence is listed here the measured time
    replaces the member-sum fallback.
    """

    def __init__(self, entries: Mapping[tuple[tuple[str, ...], int], float] | None = None):
        self.entries = dict(entries or {})
        for (seq, k), t in self.entries.items():
            if t < 0:
                raise ValueError(f"override {seq} on device {k}: negative seconds")

    def get(self, seq: tuple[str, ...], device: int) -> float | None:
        return self.entries.get((seq, device))

    def devices_for(self, seq: tuple[str, ...]) -> set[int]:
        return {k for (s, k) in self.entries if s == seq}

    def __len__(self) -> int:
        return len(self.entries)


def fused_cost(node: OpNode, device: int, overrides: CostOverrides | None = None) -> float:
    """Effective compute time of a (possibly fused) node on one device.

    An override for the node's member type sequence wins; otherwise the
    node's own profiled entry (the member sum for fused nodes) is used.
    """
    if overrides is not None:
        ov = overrides.get(node.type_seq, device)
        if ov is not None:
            return ov
    if device in node.compute_time:
        return node.compute_time[device]
    raise MissingProfileError(node.id, device)
