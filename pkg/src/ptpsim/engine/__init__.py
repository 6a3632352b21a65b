"""Discrete-event kernel and PTP node runtimes."""

from .kernel import Event, Kernel, SchedulingError
from .network import (
    InvariantViolation,
    LinkRuntime,
    Node,
    Port,
    Role,
    RunResult,
    Simulation,
    StateChange,
    link_kind_of_slave,
    simulate,
)

__all__ = [
    "Event",
    "InvariantViolation",
    "Kernel",
    "LinkRuntime",
    "Node",
    "Port",
    "Role",
    "RunResult",
    "SchedulingError",
    "Simulation",
    "StateChange",
    "link_kind_of_slave",
    "simulate",
]
