"""JSON interchange: round trips, schema guards, stable field names."""

import json
import math

import pytest
from conftest import mesh_for, relay_cluster, residual_block, table_rules, two_op_chain

from opplace import (
    CostOverrides,
    Solution,
    Status,
    gcof,
    simulate,
    solve_exact,
)
from opplace import fileio


def test_graph_round_trip_plain_and_fused(tmp_path):
    g = residual_block()
    p = tmp_path / "g.json"
    fileio.save_graph(g, p)
    assert fileio.load_graph(p) == g
    coarse = gcof(g, table_rules())
    pc = tmp_path / "gc.json"
    fileio.save_graph(coarse, pc)
    loaded = fileio.load_graph(pc)
    assert loaded == coarse
    assert loaded.node(5).members == (9, 10, 5, 6)
    assert loaded.node(5).tag.value == "fused"


def test_graph_json_field_names(tmp_path):
    g, _ = two_op_chain()
    p = tmp_path / "g.json"
    fileio.save_graph(g, p)
    doc = json.loads(p.read_text())
    assert doc["schema"] == 1 and doc["kind"] == "graph"
    node = doc["nodes"][0]
    assert set(node) == {"id", "op_type", "mem_bytes", "compute_time",
                         "members", "type_seq", "tag"}
    assert node["compute_time"] == {"0": 2.0, "1": 4.0}
    assert doc["edges"][0] == {"src": 1, "dst": 2, "payload_bytes": 10_000_000}


def test_rules_round_trip_and_fields(tmp_path):
    rules = table_rules()
    p = tmp_path / "r.json"
    fileio.save_rules(rules, p)
    loaded = fileio.load_rules(p)
    assert [(r.id, r.pattern) for r in loaded] == [(r.id, r.pattern) for r in rules]
    doc = json.loads(p.read_text())
    assert doc["rules"][0] == {"id": 1, "pattern": ["conv", "bn"]}


def test_cluster_round_trip_and_fields(tmp_path):
    c = relay_cluster()
    p = tmp_path / "c.json"
    fileio.save_cluster(c, p)
    loaded = fileio.load_cluster(p)
    assert loaded.device_ids == c.device_ids
    assert loaded.links == c.links
    assert loaded.device(2).mem_bytes == 100
    doc = json.loads(p.read_text())
    assert doc["devices"][0] == {"id": 1, "mem_bytes": 100}
    assert doc["links"][0] == {"src": 1, "dst": 2, "bandwidth_Bps": 1e7}


def test_overrides_round_trip_and_fields(tmp_path):
    ov = CostOverrides({(("conv", "bn"), 0): 2.5, (("conv", "bn", "relu"), 1): 4.0})
    p = tmp_path / "o.json"
    fileio.save_overrides(ov, p)
    assert fileio.load_overrides(p).entries == ov.entries
    doc = json.loads(p.read_text())
    assert doc["overrides"][0] == {"types": ["conv", "bn"], "device": 0,
                                   "seconds": 2.5}


def test_placement_round_trip_and_fields(tmp_path):
    g, c = two_op_chain()
    sol = solve_exact(g, c, mesh_for(c))
    p = tmp_path / "p.json"
    fileio.save_placement(sol, p)
    assert fileio.load_placement(p) == {1: 0, 2: 0}
    doc = json.loads(p.read_text())
    assert doc["status"] == "optimal"
    assert doc["makespan_s"] == 3.0
    assert doc["assignments"] == [{"op": 1, "device": 0}, {"op": 2, "device": 0}]
    by_node = {e["node"]: e for e in doc["schedule"]}
    assert by_node[1] == {"node": 1, "start_s": 0.0, "end_s": 2.0}
    assert "channel" not in by_node[3]  # co-located flow has no channel


def test_placement_records_crossing_channels(tmp_path):
    g, c = two_op_chain()
    mesh = mesh_for(c)
    from opplace import schedule_for_assignment
    sched = schedule_for_assignment(g, c, mesh, {1: 0, 2: 1})
    sol = Solution(Status.FEASIBLE, sched.makespan_s, sched)
    p = tmp_path / "p.json"
    fileio.save_placement(sol, p)
    doc = json.loads(p.read_text())
    by_node = {e["node"]: e for e in doc["schedule"]}
    assert by_node[3]["channel"] == [0, 1]


def test_placement_of_infeasible_solution(tmp_path):
    sol = Solution(Status.INFEASIBLE, math.inf, None)
    p = tmp_path / "p.json"
    fileio.save_placement(sol, p)
    doc = json.loads(p.read_text())
    assert doc["status"] == "infeasible"
    assert doc["assignments"] == [] and doc["schedule"] == []
    assert fileio.load_placement(p) == {}


def test_trace_fields(tmp_path):
    g, c = two_op_chain()
    mesh = mesh_for(c)
    makespan, events = simulate(g, c, mesh, {1: 0, 2: 1})
    p = tmp_path / "t.json"
    fileio.save_trace(makespan, events, p)
    doc = json.loads(p.read_text())
    assert doc["kind"] == "trace"
    assert doc["makespan_s"] == makespan
    assert len(doc["events"]) == len(events)
    first = doc["events"][0]
    assert set(first) == {"time_s", "kind", "node", "device", "channel"}
    assert first == {"time_s": 0.0, "kind": "op-start", "node": 1,
                     "device": 0, "channel": None}
    crossing = [e for e in doc["events"] if e["kind"] == "flow-start"][0]
    assert crossing["channel"] == [0, 1]


def test_schema_and_kind_guards(tmp_path):
    g, _ = two_op_chain()
    p = tmp_path / "g.json"
    fileio.save_graph(g, p)
    doc = json.loads(p.read_text())
    doc["schema"] = 99
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        fileio.load_graph(bad)
    with pytest.raises(ValueError):
        fileio.load_rules(p)  # right schema, wrong kind
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2, 3]")
    with pytest.raises(ValueError):
        fileio.load_graph(arr)


def test_saves_are_byte_deterministic(tmp_path):
    g = residual_block()
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    fileio.save_graph(g, a)
    fileio.save_graph(g, b)
    assert a.read_bytes() == b.read_bytes()
