"""Synchronous store-and-forward execution of schedules on a topology."""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Final

from ..models import ModelValidationError
from ..topology import Topology, neighbors
from .builders import Schedule

_LOGGER = logging.getLogger(__name__)

BUDGET_TOLERANCE: Final[float] = 1e-9

LinkKey = tuple[int, int]


class SimulationError(RuntimeError):
    """Base class for schedules that cannot execute on a topology."""

    def __init__(self, message: str, *, step: int, src: int, dst: int | None = None) -> None:
        """Record where in the schedule execution failed."""
        super().__init__(message)
        self.step = step
        self.src = src
        self.dst = dst

    def context(self) -> dict[str, Any]:
        """Return error metadata useful for logging."""
        return {"step": self.step, "src": self.src, "dst": self.dst}


class LinkNotInTopologyError(SimulationError):
    """Raised when a transfer uses a link the topology does not have."""


class NodeSendConflictError(SimulationError):
    """Raised when a node exceeds its bandwidth budget or reuses a link within one step."""


class ScheduleMismatchError(ModelValidationError):
    """Raised when a schedule targets a different family or node count than the topology."""


@dataclass(frozen=True, slots=True)
class SimResult:
    """Execution record of a simulated schedule.

    Attributes:
        makespan: Sum of all step times in seconds.
        step_times: Per-step time: slowest transfer plus one ``alpha``.
        bytes_on_link: Total bytes carried by each directed link.
    """

    makespan: float
    step_times: tuple[float, ...]
    bytes_on_link: Mapping[LinkKey, int] = field(default_factory=dict)

    @property
    def total_bytes(self) -> int:
        """Bytes moved over all links."""
        return sum(self.bytes_on_link.values())

    def to_dict(self) -> dict[str, Any]:
        """Return ``{makespan_s, step_times_s, link_bytes}`` with links keyed ``"src->dst"``."""
        return {
            "makespan_s": self.makespan,
            "step_times_s": list(self.step_times),
            "link_bytes": {
                f"{src}->{dst}": self.bytes_on_link[src, dst]
                for src, dst in sorted(self.bytes_on_link)
            },
        }


def simulate(schedule: Schedule, topology: Topology, alpha: float) -> SimResult:
    """Execute ``schedule`` on ``topology`` step by step.

    A step lasts as long as its slowest transfer (``bytes / link bandwidth``) plus ``alpha``,
    charged once per non-empty step. Within a step a node may drive several distinct links as
    long as their combined bandwidth fits its node budget.

    Raises:
        ScheduleMismatchError: If the schedule targets another family or node count.
        LinkNotInTopologyError: If a transfer uses a missing link.
        NodeSendConflictError: If a node overdraws its budget or reuses a link in a step.
    """
    if alpha < 0:
        raise ModelValidationError("alpha must be non-negative")
    if schedule.family is not topology.family or schedule.p != topology.p:
        raise ScheduleMismatchError(
            f"{schedule.family} schedule for p={schedule.p} cannot run on "
            f"{topology.family} topology with p={topology.p}"
        )

    budget = topology.node_bandwidth * (1 + BUDGET_TOLERANCE)
    step_times: list[float] = []
    link_bytes: defaultdict[LinkKey, int] = defaultdict(int)
    for index, step in enumerate(schedule.steps):
        if not step:
            step_times.append(0.0)
            continue
        used_links: set[LinkKey] = set()
        node_load: defaultdict[int, float] = defaultdict(float)
        slowest = 0.0
        for transfer in step:
            link = (transfer.src, transfer.dst)
            if not topology.has_link(*link):
                raise LinkNotInTopologyError(
                    f"step {index}: no link {transfer.src}->{transfer.dst}, "
                    f"node {transfer.src} links to {list(neighbors(topology, transfer.src))}",
                    step=index,
                    src=transfer.src,
                    dst=transfer.dst,
                )
            if link in used_links:
                raise NodeSendConflictError(
                    f"step {index}: link {transfer.src}->{transfer.dst} used twice",
                    step=index,
                    src=transfer.src,
                    dst=transfer.dst,
                )
            used_links.add(link)
            link_bandwidth = topology.link_bandwidth(*link)
            node_load[transfer.src] += link_bandwidth
            if node_load[transfer.src] > budget:
                raise NodeSendConflictError(
                    f"step {index}: node {transfer.src} exceeds its bandwidth budget",
                    step=index,
                    src=transfer.src,
                )
            slowest = max(slowest, transfer.nbytes / link_bandwidth)
            link_bytes[link] += transfer.nbytes
        step_times.append(slowest + alpha)

    result = SimResult(
        makespan=sum(step_times),
        step_times=tuple(step_times),
        bytes_on_link=dict(link_bytes),
    )
    _LOGGER.debug(
        "schedule.simulate.completed",
        extra={
            "collective": str(schedule.collective),
            "family": str(topology.family),
            "p": topology.p,
            "steps": len(step_times),
            "makespan_s": result.makespan,
        },
    )
    return result


__all__ = [
    "LinkNotInTopologyError",
    "NodeSendConflictError",
    "ScheduleMismatchError",
    "SimResult",
    "SimulationError",
    "simulate",
]
