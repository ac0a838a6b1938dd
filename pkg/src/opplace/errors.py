"""Exception types shared across the package."""


class OpPlaceError(Exception):
    """Base class for every error raised by this package."""


class CycleError(OpPlaceError):
    """The graph contains a directed cycle; ``cycle`` holds one witness."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("graph contains a cycle: " + " -> ".join(str(n) for n in self.cycle))


class DanglingEdgeError(OpPlaceError):
    """An edge references a node id that does not exist."""

    def __init__(self, src, dst, missing):
        self.src, self.dst, self.missing = src, dst, missing
        super().__init__(f"edge ({src}, {dst}) references unknown node {missing}")


class UnknownEdgeError(OpPlaceError):
    """An operation was asked about an edge the graph does not contain."""

    def __init__(self, src, dst):
        self.src, self.dst = src, dst
        super().__init__(f"no edge ({src}, {dst}) in graph")


class CycleCreationError(OpPlaceError):
    """Fusing two nodes would close a directed cycle."""

    def __init__(self, pred, succ):
        self.pred, self.succ = pred, succ
        super().__init__(f"fusing {pred} and {succ} would create a cycle (alternate path exists)")


class DisconnectedClusterError(OpPlaceError):
    """Some device pairs are unreachable over the cluster links."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(f"cluster is not fully reachable; missing routes: {self.pairs}")


class MissingProfileError(OpPlaceError):
    """No profiled compute time for a node on the requested device."""

    def __init__(self, node, device):
        self.node, self.device = node, device
        super().__init__(f"node {node} has no profiled time on device {device}")


class MissingCostError(OpPlaceError):
    """An op lacks a compute time entry for a cluster device."""

    def __init__(self, op, device):
        self.op, self.device = op, device
        super().__init__(f"op {op} has no compute time for device {device}")


class InfeasibleMemoryError(OpPlaceError):
    """Total op memory exceeds total cluster memory; no placement can fit."""

    def __init__(self, needed, available):
        self.needed, self.available = needed, available
        super().__init__(f"ops need {needed} bytes but cluster holds {available}")


class MemoryExceededError(OpPlaceError):
    """A concrete assignment overflows the memory of one device."""

    def __init__(self, device, overflow):
        self.device, self.overflow = device, overflow
        super().__init__(f"device {device} over capacity by {overflow} bytes")


class NonIntegralError(OpPlaceError):
    """A binary variable in a solver answer is not within tolerance of 0/1."""

    def __init__(self, name, value):
        self.name, self.value = name, value
        super().__init__(f"variable {name} = {value} is not integral")


class ConstraintViolatedError(OpPlaceError):
    """A solver answer violates a model row beyond tolerance."""

    def __init__(self, row, slack):
        self.row, self.slack = row, slack
        super().__init__(f"constraint {row} violated by {slack}")


class TooLargeError(OpPlaceError):
    """The instance exceeds the hard enumeration guard."""

    def __init__(self, ops, devices):
        self.ops, self.devices = ops, devices
        super().__init__(f"{devices}^{ops} assignments exceed the enumeration guard")
