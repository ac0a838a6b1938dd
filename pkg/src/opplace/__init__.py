"""Fusion-aware placement of operator graphs onto heterogeneous devices.

The pipeline: model a computation as a DAG of profiled ops (graph),
shrink it with rule-driven operator fusion (fusion), derive effective
inter-device bandwidths (profiles), then compute a makespan-minimal
placement either through branch and bound (solver) or via an exportable
mixed-integer model (milp), validating every schedule with a
discrete-event simulator (simulator) and comparing against greedy
baselines (baselines).
"""

from .baselines import BaselineKind, greedy_place
from .bench import BenchConfig, BenchReport, BenchRow, run_bench
from .errors import (
    ConstraintViolatedError,
    CycleCreationError,
    CycleError,
    DanglingEdgeError,
    DisconnectedClusterError,
    InfeasibleMemoryError,
    MemoryExceededError,
    MissingCostError,
    MissingProfileError,
    NonIntegralError,
    OpPlaceError,
    TooLargeError,
    UnknownEdgeError,
)
from .fusion import (
    FUSE_JOINER,
    ConnKind,
    FusionRule,
    FusionRuleSet,
    Match,
    MatchKind,
    classify_connection,
    fuse,
    gcof,
    is_valid_conn,
    match_rule,
)
from .graph import (
    AugGraph,
    CompGraph,
    FlowEdge,
    FlowNode,
    OpNode,
    SuccClosure,
    Tag,
    augment,
    contract,
    succ_closure,
    topo_order,
    validate_dag,
)
from .milp import (
    BigM,
    MilpModel,
    big_m,
    build_model,
    export_lp,
    export_lp_text,
    extract_placement,
)
from .placement import Placement, Schedule, Solution, Status
from .profiles import (
    Cluster,
    CostOverrides,
    Device,
    EffectiveMesh,
    comm_time,
    effective_bandwidth,
    fused_cost,
)
from .simulator import (
    Event,
    EventKind,
    Violation,
    ViolationKind,
    check_feasibility,
    simulate,
)
from .solver import (
    SolveBudget,
    brute_force,
    schedule_for_assignment,
    solve_exact,
    solve_with_derived_mesh,
)
from .synth import GenSpec, gen_synthetic

__version__ = "0.1.0"

__all__ = [
    "AugGraph", "BaselineKind", "BenchConfig", "BenchReport", "BenchRow",
    "BigM", "Cluster", "CompGraph", "ConnKind", "ConstraintViolatedError",
    "CostOverrides", "CycleCreationError", "CycleError", "DanglingEdgeError",
    "Device", "DisconnectedClusterError", "EffectiveMesh", "Event",
    "EventKind", "FlowEdge", "FlowNode", "FUSE_JOINER", "FusionRule",
    "FusionRuleSet", "GenSpec", "InfeasibleMemoryError", "Match", "MatchKind",
    "MemoryExceededError", "MilpModel", "MissingCostError",
    "MissingProfileError", "NonIntegralError", "OpNode", "OpPlaceError",
    "Placement", "Schedule", "Solution", "SolveBudget", "Status",
    "SuccClosure", "Tag", "TooLargeError", "UnknownEdgeError", "Violation",
    "ViolationKind", "augment", "big_m", "brute_force", "build_model",
    "check_feasibility", "classify_connection", "comm_time", "contract",
    "effective_bandwidth", "export_lp", "export_lp_text", "extract_placement",
    "fuse", "fused_cost", "gcof", "gen_synthetic", "greedy_place",
    "is_valid_conn", "match_rule", "run_bench", "schedule_for_assignment",
    "simulate", "solve_exact", "solve_with_derived_mesh", "succ_closure",
    "topo_order", "validate_dag",
]
