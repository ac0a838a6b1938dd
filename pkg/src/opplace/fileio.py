"""Versioned JSON interchange for graphs, rules, clusters and results.

Every document carries {"schema": 1, "kind": "..."}; loaders reject
anything else so stale files fail loudly instead of half-parsing.
Device ids appear as JSON object keys in a few places and are therefore
serialized as strings; loaders convert them back to int.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .fusion import FusionRule, FusionRuleSet
from .graph import CompGraph, FlowEdge, OpNode, Tag
from .placement import Solution
from .profiles import Cluster, CostOverrides, Device
from .simulator import Event

SCHEMA = 1


def _load(path: str | Path, kind: str) -> dict[str, Any]:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object")
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"{path}: unsupported schema {doc.get('schema')!r}")
    if doc.get("kind") != kind:
        raise ValueError(f"{path}: expected kind {kind!r}, found {doc.get('kind')!r}")
    return doc


def _dump(doc: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def save_graph(g: CompGraph, path: str | Path) -> None:
    doc = {
        "schema": SCHEMA,
        "kind": "graph",
        "nodes": [{
            "id": n.id,
            "op_type": n.op_type,
            "mem_bytes": n.mem_bytes,
            "compute_time": {str(k): t for k, t in sorted(n.compute_time.items())},
            "members": list(n.members),
            "type_seq": list(n.type_seq),
            "tag": n.tag.value,
        } for n in g.nodes],
        "edges": [{"src": e.src, "dst": e.dst, "payload_bytes": e.payload_bytes}
                  for e in g.edges],
    }
    _dump(doc, path)


def load_graph(path: str | Path) -> CompGraph:
    doc = _load(path, "graph")
    nodes = [OpNode(
        id=n["id"],
        op_type=n["op_type"],
        mem_bytes=n["mem_bytes"],
        compute_time={int(k): float(t) for k, t in n["compute_time"].items()},
        members=tuple(n.get("members", ())),
        type_seq=tuple(n.get("type_seq", ())),
        tag=Tag(n.get("tag", "plain")),
    ) for n in doc["nodes"]]
    edges = [FlowEdge(e["src"], e["dst"], e["payload_bytes"]) for e in doc["edges"]]
    return CompGraph(nodes, edges)


def save_rules(rules: FusionRuleSet, path: str | Path) -> None:
    doc = {
        "schema": SCHEMA,
        "kind": "rules",
        "rules": [{"id": r.id, "pattern": list(r.pattern)} for r in rules],
    }
    _dump(doc, path)


def load_rules(path: str | Path) -> FusionRuleSet:
    doc = _load(path, "rules")
    return FusionRuleSet([FusionRule(r["id"], tuple(r["pattern"]))
                          for r in doc["rules"]])


def save_cluster(c: Cluster, path: str | Path) -> None:
    doc = {
        "schema": SCHEMA,
        "kind": "cluster",
        "devices": [{"id": d.id, "mem_bytes": d.mem_bytes}
                    for d in (c.device(k) for k in c.device_ids)],
        "links": [{"src": a, "dst": b, "bandwidth_Bps": bw}
                  for (a, b), bw in sorted(c.links.items())],
    }
    _dump(doc, path)


def load_cluster(path: str | Path) -> Cluster:
    doc = _load(path, "cluster")
    devices = [Device(d["id"], d["mem_bytes"]) for d in doc["devices"]]
    links = {(l["src"], l["dst"]): float(l["bandwidth_Bps"]) for l in doc["links"]}
    return Cluster(devices, links)


def save_overrides(o: CostOverrides, path: str | Path) -> None:
    doc = {
        "schema": SCHEMA,
        "kind": "overrides",
        "overrides": [{"types": list(seq), "device": k, "seconds": s}
                      for (seq, k), s in sorted(o.entries.items())],
    }
    _dump(doc, path)


def load_overrides(path: str | Path) -> CostOverrides:
    doc = _load(path, "overrides")
    return CostOverrides({(tuple(e["types"]), e["device"]): float(e["seconds"])
                          for e in doc["overrides"]})


def save_placement(sol: Solution, path: str | Path) -> None:
    """Placement plus its timed schedule, one self-contained document."""
    sched = sol.schedule
    doc: dict[str, Any] = {
        "schema": SCHEMA,
        "kind": "placement",
        "status": sol.status.value,
        "makespan_s": sol.objective_s,
        "assignments": [],
        "schedule": [],
    }
    if sched is not None:
        doc["assignments"] = [{"op": i, "device": k}
                              for i, k in sorted(sched.assignment.items())]
        for n in sorted(sched.starts):
            entry: dict[str, Any] = {"node": n, "start_s": sched.starts[n],
                                     "end_s": sched.ends[n]}
            ch = sched.channels.get(n)
            if ch is not None:
                entry["channel"] = list(ch)
            doc["schedule"].append(entry)
    _dump(doc, path)


def load_placement(path: str | Path) -> dict[int, int]:
    """Assignment only; the embedded schedule is informational."""
    doc = _load(path, "placement")
    return {a["op"]: a["device"] for a in doc["assignments"]}


def save_trace(makespan_s: float, events: list[Event], path: str | Path) -> None:
    doc = {
        "schema": SCHEMA,
        "kind": "trace",
        "makespan_s": makespan_s,
        "events": [{
            "time_s": e.time_s,
            "kind": e.kind.value,
            "node": e.node,
            "device": e.device,
            "channel": list(e.channel) if e.channel is not None else None,
        } for e in events],
    }
    _dump(doc, path)
