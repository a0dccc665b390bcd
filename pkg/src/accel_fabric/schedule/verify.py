"""Symbolic execution oracles that check a schedule leaves every node with the right data."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..models import CollectiveKind
from .builders import Schedule

_LOGGER = logging.getLogger(__name__)

Payload = tuple[int, int]


class MalformedScheduleError(RuntimeError):
    """Raised when symbolic execution meets a transfer that cannot happen."""


@dataclass(slots=True)
class NodeState:
    """Symbolic contents of one node.

    Attributes:
        holds: Allreduce chunk index -> nodes whose contributions the local copy includes.
        carrying: Alltoall payloads ``(origin, destination)`` stored at the node awaiting
            forwarding.
        received: Alltoall payloads delivered to the node as their final destination.
    """

    holds: dict[int, frozenset[int]] = field(default_factory=dict)
    carrying: set[Payload] = field(default_factory=set)
    received: set[Payload] = field(default_factory=set)


def _initial_states(schedule: Schedule) -> list[NodeState]:
    p = schedule.p
    if schedule.collective is CollectiveKind.ALLREDUCE:
        return [
            NodeState(holds={chunk: frozenset({node}) for chunk in range(p)}) for node in range(p)
        ]
    return [
        NodeState(carrying={(node, destination) for destination in range(p) if destination != node})
        for node in range(p)
    ]


def _merge(current: frozenset[int], carried: frozenset[int]) -> frozenset[int]:
    if current.isdisjoint(carried):
        return current | carried
    if carried >= current:
        return carried
    raise MalformedScheduleError("contribution would be reduced twice")


def symbolic_execute(schedule: Schedule, *, upto: int | None = None) -> list[NodeState]:
    """Replay the first ``upto`` steps (all by default) on symbolic node states.

    Transfers in a step read the sender's state as it was when the step began. Allreduce
    reception reduces disjoint contributor sets and replaces a partial copy with a more
    complete one; alltoall transfers move a payload the sender must currently store.

    Raises:
        MalformedScheduleError: If a transfer is impossible or would double-count data.
    """
    p = schedule.p
    states = _initial_states(schedule)
    steps = schedule.steps if upto is None else schedule.steps[:upto]
    for index, step in enumerate(steps):
        snapshot_holds = [dict(state.holds) for state in states]
        snapshot_carrying = [frozenset(state.carrying) for state in states]
        moved: set[tuple[int, Payload]] = set()
        for transfer in step:
            if not (0 <= transfer.src < p and 0 <= transfer.dst < p):
                raise MalformedScheduleError(f"step {index}: node out of range")
            receiver = states[transfer.dst]
            if schedule.collective is CollectiveKind.ALLREDUCE:
                chunk = transfer.tag.chunk
                if chunk not in snapshot_holds[transfer.src]:
                    raise MalformedScheduleError(f"step {index}: unknown chunk {chunk}")
                carried = snapshot_holds[transfer.src][chunk]
                receiver.holds[chunk] = _merge(receiver.holds[chunk], carried)
                continue
            payload = (transfer.tag.origin, transfer.tag.chunk)
            if payload not in snapshot_carrying[transfer.src] or (transfer.src, payload) in moved:
                raise MalformedScheduleError(
                    f"step {index}: node {transfer.src} does not store payload {payload}"
                )
            moved.add((transfer.src, payload))
            states[transfer.src].carrying.discard(payload)
            if payload[1] == transfer.dst:
                if payload in receiver.received:
                    raise MalformedScheduleError(f"step {index}: payload {payload} delivered twice")
                receiver.received.add(payload)
            else:
                receiver.carrying.add(payload)
    return states


def verify_allreduce(schedule: Schedule) -> bool:
    """Return ``True`` iff every node ends with every chunk reduced over all ``p`` nodes."""
    if schedule.collective is not CollectiveKind.ALLREDUCE:
        return False
    try:
        states = symbolic_execute(schedule)
    except MalformedScheduleError as exc:
        _LOGGER.debug("schedule.verify.malformed", extra={"error": str(exc)})
        return False
    everyone = frozenset(range(schedule.p))
    return all(
        state.holds.get(chunk) == everyone for state in states for chunk in range(schedule.p)
    )


def verify_alltoall(schedule: Schedule) -> bool:
    """Return ``True`` iff every node receives exactly one payload from each other origin."""
    if schedule.collective is not CollectiveKind.ALLTOALL:
        return False
    try:
        states = symbolic_execute(schedule)
    except MalformedScheduleError as exc:
        _LOGGER.debug("schedule.verify.malformed", extra={"error": str(exc)})
        return False
    p = schedule.p
    for node, state in enumerate(states):
        expected = {(origin, node) for origin in range(p) if origin != node}
        if state.received != expected or state.carrying:
            return False
    return True


__all__ = [
    "MalformedScheduleError",
    "NodeState",
    "symbolic_execute",
    "verify_allreduce",
    "verify_alltoall",
]
