"""Collective schedules, their simulator, and symbolic correctness oracles."""

from .builders import (
    PayloadTag,
    Schedule,
    Step,
    Transfer,
    build_fc_allreduce,
    build_fc_alltoall,
    build_ring_allreduce,
    build_ring_alltoall,
    build_schedule,
    chunk_bytes,
    drop_step,
)
from .simulate import (
    LinkNotInTopologyError,
    NodeSendConflictError,
    ScheduleMismatchError,
    SimResult,
    SimulationError,
    simulate,
)
from .verify import (
    MalformedScheduleError,
    NodeState,
    symbolic_execute,
    verify_allreduce,
    verify_alltoall,
)

__all__ = [
    "LinkNotInTopologyError",
    "MalformedScheduleError",
    "NodeSendConflictError",
    "NodeState",
    "PayloadTag",
    "Schedule",
    "ScheduleMismatchError",
    "SimResult",
    "SimulationError",
    "Step",
    "Transfer",
    "build_fc_allreduce",
    "build_fc_alltoall",
    "build_ring_allreduce",
    "build_ring_alltoall",
    "build_schedule",
    "chunk_bytes",
    "drop_step",
    "simulate",
    "symbolic_execute",
    "verify_allreduce",
    "verify_alltoall",
]
