"""Shared result types: placements, timed schedules, solver solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

# A placement maps every op id to the device id it runs on.
Placement = dict[int, int]


class Status(Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    BUDGET = "budget"


@dataclass
class Schedule:
    """A placed, timed execution of an augmented graph.

    ``starts``/``ends`` cover ops and flows alike; ``channels`` maps each
    flow to its (src device, dst device) pair, or None when the endpoints
    are co-located and the flow is free.
    """

    assignment: Placement
    starts: dict[int, float]
    ends: dict[int, float]
    channels: dict[int, tuple[int, int] | None]
    makespan_s: float


@dataclass
class Solution:
    """Outcome of a placement solver."""

    status: Status
    objective_s: float
    schedule: Schedule | None
    gap: float | None = None

    @property
    def placement(self) -> Placement:
        if self.schedule is None:
            raise ValueError("no schedule on an infeasible solution")
        return self.schedule.assignment
