"""Model assembly: horizon, variable layout, rows, LP export, extraction."""

import random

import pytest
from conftest import mesh_for, random_dag, two_device_cluster, two_op_chain

from opplace import (
    CompGraph,
    ConstraintViolatedError,
    FlowEdge,
    InfeasibleMemoryError,
    MissingCostError,
    NonIntegralError,
    OpNode,
    augment,
    big_m,
    build_model,
    export_lp,
    export_lp_text,
    extract_placement,
    succ_closure,
)


def one_op_instance():
    g = CompGraph([OpNode(1, "conv", 10, {0: 2.0, 1: 3.0})], [])
    return g, two_device_cluster()


def parallel_pair_instance():
    g = CompGraph([OpNode(1, "conv", 10, {0: 2.0, 1: 3.0}),
                   OpNode(2, "bn", 10, {0: 1.0, 1: 1.5})], [])
    return g, two_device_cluster()


def test_big_m_single_op_is_slowest_time():
    g, c = one_op_instance()
    m = big_m(augment(g), c, mesh_for(c))
    assert (m.ms, m.ml, m.mr) == (3.0, 3.0, 3.0)


def test_big_m_chain_adds_worst_transfer():
    g = CompGraph(
        [OpNode(1, "conv", 10, {0: 2.0, 1: 1.0}),
         OpNode(2, "bn", 10, {0: 3.0, 1: 2.0})],
        [FlowEdge(1, 2, 100_000_000)],
    )
    c = two_device_cluster()  # 5 MB/s both ways: worst transfer is 20 s
    m = big_m(augment(g), c, mesh_for(c))
    assert m.ms == 2.0 + 3.0 + 20.0


def test_build_model_rejects_bad_inputs():
    g, c = one_op_instance()
    with pytest.raises(ValueError):
        build_model(CompGraph([], []), c, mesh_for(c))
    missing = CompGraph([OpNode(1, "conv", 10, {0: 2.0})], [])
    with pytest.raises(MissingCostError):
        build_model(missing, c, mesh_for(c))
    heavy = CompGraph([OpNode(1, "conv", 300, {0: 2.0, 1: 3.0})], [])
    with pytest.raises(InfeasibleMemoryError):
        build_model(heavy, c, mesh_for(c))


def test_one_op_model_layout():
    g, c = one_op_instance()
    mdl = build_model(g, c, mesh_for(c))
    assert [v.name for v in mdl.vars] == ["x_1_0", "x_1_1", "S_1", "C_1", "T"]
    assert mdl.num_binaries == 2
    assert [r.name for r in mdl.rows] == \
        ["objlink_1", "dur_1", "assign_1", "mem_0", "mem_1"]


def test_two_op_chain_model_counts_frozen():
    g, c = two_op_chain()
    mdl = build_model(g, c, mesh_for(c))
    assert len(mdl.vars) == 14
    assert mdl.num_binaries == 7
    assert len(mdl.rows) == 21
    assert mdl.objective_var == "T"


def test_parallel_pair_gets_one_order_binary():
    g, c = parallel_pair_instance()
    mdl = build_model(g, c, mesh_for(c))
    names = [v.name for v in mdl.vars]
    assert names.count("dord_1_2") == 1
    assert sum(1 for n in names if n.startswith("dord_")) == 1
    ord_rows = [r for r in mdl.rows if r.name.startswith("ord")]
    # one pair of inequalities per device
    assert len(ord_rows) == 4
    assert {r.name for r in ord_rows} == \
        {"ord1_1_2_0", "ord1_1_2_1", "ord2_1_2_0", "ord2_1_2_1"}


def test_variable_count_formulas_random_sweep():
    """|x| = ops*K, |z| = flows, |u| = flows*K*(K-1), plus S, C, T and
    one order binary per unrelated pair."""
    for trial in range(25):
        rng = random.Random(trial)
        g = random_dag(rng, max_ops=8)
        c = two_device_cluster(mem=10_000)
        mesh = mesh_for(c)
        mdl = build_model(g, c, mesh)
        aug = augment(g)
        alpha, beta, k = len(aug.op_ids), len(aug.flow_ids), 2
        closure = succ_closure(aug)

        def unrelated(a, b):
            return b not in closure[a] and a not in closure[b]

        op_pairs = [(i, j) for ii, i in enumerate(aug.op_ids)
                    for j in aug.op_ids[ii + 1:] if unrelated(i, j)]
        flow_pairs = [(q, r) for qi, q in enumerate(aug.flow_ids)
                      for r in aug.flow_ids[qi + 1:] if unrelated(q, r)]
        expect_vars = (alpha * k + beta + beta * k * (k - 1)
                       + 2 * (alpha + beta) + len(op_pairs) + len(flow_pairs) + 1)
        assert len(mdl.vars) == expect_vars
        assert mdl.num_binaries == (alpha * k + beta + beta * k * (k - 1)
                                    + len(op_pairs) + len(flow_pairs))
        expect_rows = (alpha            # objective links
                       + 2 * beta       # precedence, two links per flow
                       + alpha          # durations
                       + alpha          # assignment partitions
                       + k              # memory caps
                       + 2 * k * len(op_pairs)
                       + beta * (3 * k + k * (k - 1) + 3)
                       + 4 * k * len(flow_pairs))
        assert len(mdl.rows) == expect_rows
        assert all(r.sense in ("<=", "=") for r in mdl.rows)


def test_lp_export_shape_and_determinism(tmp_path):
    g, c = two_op_chain()
    mesh = mesh_for(c)
    txt = export_lp_text(build_model(g, c, mesh))
    assert txt.startswith("Minimize\n obj: T\nSubject To\n")
    assert txt.endswith("End\n")
    assert "Binaries\n" in txt
    assert len(txt.encode()) == 825
    # rebuilding from scratch yields identical bytes
    assert export_lp_text(build_model(g, c, mesh)) == txt
    path = tmp_path / "m.lp"
    export_lp(build_model(g, c, mesh), str(path))
    assert path.read_text() == txt


def _chain_solution(mdl):
    """Hand-checked optimal point of the two-op chain: all on device 0."""
    vals = {v.name: 0.0 for v in mdl.vars}
    vals.update({"x_1_0": 1.0, "x_2_0": 1.0,
                 "S_1": 0.0, "C_1": 2.0,
                 "S_3": 2.0, "C_3": 2.0,
                 "S_2": 2.0, "C_2": 3.0,
                 "T": 3.0})
    return vals


def test_extract_placement_accepts_valid_solution():
    g, c = two_op_chain()
    mdl = build_model(g, c, mesh_for(c))
    sched = extract_placement(mdl, _chain_solution(mdl))
    assert sched.assignment == {1: 0, 2: 0}
    assert sched.makespan_s == 3.0
    assert sched.starts == {1: 0.0, 2: 2.0, 3: 2.0}
    assert sched.ends == {1: 2.0, 2: 3.0, 3: 2.0}
    assert sched.channels == {3: None}


def test_extract_placement_reports_crossing_channel():
    g, c = two_op_chain()
    mdl = build_model(g, c, mesh_for(c))
    vals = {v.name: 0.0 for v in mdl.vars}
    # split placement: conv on 0, bn on 1, paying the 2 s transfer
    vals.update({"x_1_0": 1.0, "x_2_1": 1.0, "z_3": 1.0, "u_3_0_1": 1.0,
                 "S_1": 0.0, "C_1": 2.0,
                 "S_3": 2.0, "C_3": 4.0,
                 "S_2": 4.0, "C_2": 4.5,
                 "T": 4.5})
    sched = extract_placement(mdl, vals)
    assert sched.assignment == {1: 0, 2: 1}
    assert sched.channels == {3: (0, 1)}
    assert sched.makespan_s == 4.5


def test_extract_placement_rejects_fractional_binary():
    g, c = two_op_chain()
    mdl = build_model(g, c, mesh_for(c))
    vals = _chain_solution(mdl)
    vals["x_1_0"], vals["x_1_1"] = 0.5, 0.5
    with pytest.raises(NonIntegralError):
        extract_placement(mdl, vals)


def test_extract_placement_rejects_double_assignment():
    g, c = two_op_chain()
    mdl = build_model(g, c, mesh_for(c))
    vals = _chain_solution(mdl)
    vals["x_1_1"] = 1.0  # integral, but assign_1 now sums to 2
    with pytest.raises(ConstraintViolatedError):
        extract_placement(mdl, vals)


def test_extract_placement_requires_every_variable():
    g, c = two_op_chain()
    mdl = build_model(g, c, mesh_for(c))
    vals = _chain_solution(mdl)
    del vals["T"]
    with pytest.raises(KeyError):
        extract_placement(mdl, vals)
