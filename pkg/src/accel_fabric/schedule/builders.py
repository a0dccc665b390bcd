"""Step-by-step collective schedules for ring and fully connected fabrics."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace
from typing import Final

from .._format import render_csv
from ..models import CollectiveKind, ModelValidationError, TopologyFamily, UnsupportedFamilyError
from ..topology import gamma

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, order=True)
class PayloadTag:
    """Symbolic identity of a chunk in flight.

    Attributes:
        origin: Node where the chunk's current phase started.
        chunk: Allreduce chunk index, or the final destination of an alltoall payload.
        hops: Hops the chunk has already travelled within the phase.
    """

    origin: int
    chunk: int
    hops: int = 0

    def __str__(self) -> str:  # noqa: D105
        return f"o{self.origin}:c{self.chunk}:h{self.hops}"


@dataclass(frozen=True, slots=True)
class Transfer:
    """One point-to-point copy of ``nbytes`` along the link ``src -> dst``."""

    src: int
    dst: int
    nbytes: int
    tag: PayloadTag

    def __post_init__(self) -> None:
        """Validate endpoints and payload size."""
        if self.src == self.dst:
            raise ModelValidationError(f"Transfer {self.src}->{self.dst} is a self copy")
        if self.nbytes <= 0:
            raise ModelValidationError("Transfer.nbytes must be positive")


Step = tuple[Transfer, ...]


@dataclass(frozen=True, slots=True)
class Schedule:
    """Ordered synchronous steps of a collective on a topology family.

    Attributes:
        collective: Collective the schedule implements.
        family: Topology family whose direct links the transfers use.
        p: Number of nodes.
        message_bytes: Per-node payload ``M`` the schedule was built for.
        steps: Steps in execution order; all transfers of a step run concurrently.
    """

    collective: CollectiveKind
    family: TopologyFamily
    p: int
    message_bytes: int
    steps: tuple[Step, ...]

    @property
    def chunk_bytes(self) -> int:
        """Padded chunk size ``ceil(M / p)`` charged for every transfer."""
        return chunk_bytes(self.message_bytes, self.p)

    @property
    def total_bytes(self) -> int:
        """Bytes moved over all links across all steps."""
        return sum(transfer.nbytes for step in self.steps for transfer in step)

    def to_trace_csv(self) -> str:
        """Render the schedule as ``step_index,src,dst,bytes,tag`` lines."""
        rows = (
            [index, transfer.src, transfer.dst, transfer.nbytes, str(transfer.tag)]
            for index, step in enumerate(self.steps)
            for transfer in step
        )
        return render_csv(["step_index", "src", "dst", "bytes", "tag"], rows)


def chunk_bytes(message_bytes: int, p: int) -> int:
    """Return ``ceil(message_bytes / p)``; partial chunks are padded to the full size."""
    if p < 2:  # noqa: PLR2004
        raise ModelValidationError(f"Schedules need at least 2 nodes, got {p}")
    if message_bytes <= 0:
        raise ModelValidationError(f"Schedules need a positive message size, got {message_bytes}")
    return -(-message_bytes // p)


def _finish(
    collective: CollectiveKind,
    family: TopologyFamily,
    p: int,
    message_bytes: int,
    steps: list[Step],
) -> Schedule:
    schedule = Schedule(
        collective=collective,
        family=family,
        p=p,
        message_bytes=message_bytes,
        steps=tuple(steps),
    )
    _LOGGER.debug(
        "schedule.build",
        extra={
            "collective": str(collective),
            "family": str(family),
            "p": p,
            "steps": len(schedule.steps),
        },
    )
    return schedule


def build_ring_allreduce(p: int, message_bytes: int) -> Schedule:
    """Ring allreduce: ``p-1`` reduce-scatter steps followed by ``p-1`` allgather steps.

    Every node sends one chunk to its clockwise neighbour per step. After the reduce-scatter
    node ``i`` owns chunk ``i+1`` fully reduced; the allgather circulates the owned chunks.
    """
    size = chunk_bytes(message_bytes, p)
    steps: list[Step] = []
    # Reduce-scatter: chunk c starts at node c and accumulates one contribution per hop.
    for step in range(p - 1):
        transfers: list[Transfer] = []
        for node in range(p):
            chunk = (node - step) % p
            transfers.append(Transfer(node, (node + 1) % p, size, PayloadTag(chunk, chunk, step)))
        steps.append(tuple(transfers))
    # Allgather: chunk c starts at its owner c-1.
    for step in range(p - 1):
        transfers = []
        for node in range(p):
            chunk = (node + 1 - step) % p
            origin = (chunk - 1) % p
            transfers.append(Transfer(node, (node + 1) % p, size, PayloadTag(origin, chunk, step)))
        steps.append(tuple(transfers))
    return _finish(CollectiveKind.ALLREDUCE, TopologyFamily.RING, p, message_bytes, steps)


def build_fc_allreduce(p: int, message_bytes: int) -> Schedule:
    """Fully connected allreduce: one direct reduce-scatter step and one direct allgather step."""
    size = chunk_bytes(message_bytes, p)
    reduce_scatter = tuple(
        Transfer(node, owner, size, PayloadTag(node, owner, 0))
        for node in range(p)
        for owner in range(p)
        if node != owner
    )
    allgather = tuple(
        Transfer(owner, node, size, PayloadTag(owner, owner, 1))
        for owner in range(p)
        for node in range(p)
        if node != owner
    )
    return _finish(
        CollectiveKind.ALLREDUCE,
        TopologyFamily.FULLY_CONNECTED,
        p,
        message_bytes,
        [reduce_scatter, allgather],
    )


def _ring_alltoall_phases(p: int) -> list[tuple[int, int]]:
    quotient, remainder = divmod(p - 1, 2)
    clockwise = [(distance, 1) for distance in range(1, quotient + 1)]
    if remainder:
        clockwise.append((p // 2, 1))
    counter_clockwise = [(distance, -1) for distance in range(1, quotient + 1)]
    return clockwise + counter_clockwise


def build_ring_alltoall(p: int, message_bytes: int) -> Schedule:
    """Ring alltoall by hop distance with the two directions serialized.

    For every distance ``h`` and direction a phase of ``h`` store-and-forward steps moves each
    node's payload for the node ``h`` hops away one hop per step. Clockwise phases (including
    the single ``p/2`` phase for even ``p``) run before counter-clockwise ones, giving exactly
    ``gamma(p)`` steps.
    """
    size = chunk_bytes(message_bytes, p)
    steps: list[Step] = []
    for distance, direction in _ring_alltoall_phases(p):
        for hop in range(distance):
            transfers: list[Transfer] = []
            for node in range(p):
                origin = (node - direction * hop) % p
                destination = (origin + direction * distance) % p
                tag = PayloadTag(origin, destination, hop)
                transfers.append(Transfer(node, (node + direction) % p, size, tag))
            steps.append(tuple(transfers))
    if len(steps) != gamma(p):  # pragma: no cover - construction invariant
        raise AssertionError("ring alltoall step count diverged from gamma(p)")
    return _finish(CollectiveKind.ALLTOALL, TopologyFamily.RING, p, message_bytes, steps)


def build_fc_alltoall(p: int, message_bytes: int) -> Schedule:
    """Fully connected alltoall: one step in which every node sends directly to every other."""
    size = chunk_bytes(message_bytes, p)
    step = tuple(
        Transfer(node, destination, size, PayloadTag(node, destination, 0))
        for node in range(p)
        for destination in range(p)
        if node != destination
    )
    return _finish(
        CollectiveKind.ALLTOALL, TopologyFamily.FULLY_CONNECTED, p, message_bytes, [step]
    )


_BUILDERS: Final[dict[tuple[CollectiveKind, TopologyFamily], Callable[[int, int], Schedule]]] = {
    (CollectiveKind.ALLREDUCE, TopologyFamily.RING): build_ring_allreduce,
    (CollectiveKind.ALLREDUCE, TopologyFamily.FULLY_CONNECTED): build_fc_allreduce,
    (CollectiveKind.ALLTOALL, TopologyFamily.RING): build_ring_alltoall,
    (CollectiveKind.ALLTOALL, TopologyFamily.FULLY_CONNECTED): build_fc_alltoall,
}


def build_schedule(
    kind: CollectiveKind, family: TopologyFamily, p: int, message_bytes: int
) -> Schedule:
    """Build the schedule for ``kind`` on ``family``.

    Raises:
        UnsupportedFamilyError: For families without a built-in schedule.
    """
    builder = _BUILDERS.get((kind, family))
    if builder is None:
        raise UnsupportedFamilyError(f"No built-in {kind} schedule for {family}")
    return builder(p, message_bytes)


def drop_step(schedule: Schedule, index: int) -> Schedule:
    """Return a copy of ``schedule`` with step ``index`` removed."""
    if not 0 <= index < len(schedule.steps):
        raise IndexError(f"Schedule has no step {index}")
    steps = schedule.steps[:index] + schedule.steps[index + 1 :]
    return replace(schedule, steps=steps)


__all__ = [
    "PayloadTag",
    "Schedule",
    "Step",
    "Transfer",
    "build_fc_allreduce",
    "build_fc_alltoall",
    "build_ring_allreduce",
    "build_ring_alltoall",
    "build_schedule",
    "chunk_bytes",
    "drop_step",
]
