from collections import Counter
from itertools import permutations

import pytest

from accel_fabric.models import (
    CollectiveKind,
    ModelValidationError,
    TopologyFamily,
    UnsupportedFamilyError,
)
from accel_fabric.schedule import (
    PayloadTag,
    Transfer,
    build_fc_allreduce,
    build_fc_alltoall,
    build_ring_allreduce,
    build_ring_alltoall,
    build_schedule,
    chunk_bytes,
    drop_step,
)
from accel_fabric.topology import build_topology, gamma, hop_count


def test_ring_allreduce_shape() -> None:
    schedule = build_ring_allreduce(4, 8)

    assert schedule.collective is CollectiveKind.ALLREDUCE
    assert schedule.family is TopologyFamily.RING
    assert len(schedule.steps) == 6
    assert all(len(step) == 4 for step in schedule.steps)
    assert {transfer.nbytes for step in schedule.steps for transfer in step} == {2}
    assert schedule.total_bytes == 48


@pytest.mark.parametrize("p", range(2, 17))
def test_ring_schedules_send_once_per_node_per_step(p: int) -> None:
    for schedule in (build_ring_allreduce(p, p * 4), build_ring_alltoall(p, p * 4)):
        for step in schedule.steps:
            senders = Counter(transfer.src for transfer in step)
            assert senders == Counter(range(p))
            assert all(
                transfer.dst in {(transfer.src + 1) % p, (transfer.src - 1) % p}
                for transfer in step
            )


@pytest.mark.parametrize("p", range(2, 17))
def test_ring_alltoall_takes_gamma_steps(p: int) -> None:
    assert len(build_ring_alltoall(p, p).steps) == gamma(p)


@pytest.mark.parametrize("p", [2, 5, 8, 11])
def test_ring_alltoall_transfers_match_hop_sum(p: int) -> None:
    ring = build_topology(TopologyFamily.RING, p, 1.0)
    hop_sum = sum(hop_count(ring, a, b) for a, b in permutations(range(p), 2))

    schedule = build_ring_alltoall(p, p)

    assert sum(len(step) for step in schedule.steps) == hop_sum == p * gamma(p)


def test_fully_connected_schedules_are_direct() -> None:
    allreduce = build_fc_allreduce(4, 12)
    alltoall = build_fc_alltoall(4, 12)

    assert [len(step) for step in allreduce.steps] == [12, 12]
    assert [len(step) for step in alltoall.steps] == [12]
    assert {(t.src, t.dst) for t in alltoall.steps[0]} == set(permutations(range(4), 2))


def test_chunk_bytes_rounds_up() -> None:
    assert chunk_bytes(8, 4) == 2
    assert chunk_bytes(10, 4) == 3
    assert build_ring_allreduce(4, 10).chunk_bytes == 3


@pytest.mark.parametrize(("message_bytes", "p"), [(8, 1), (0, 4), (-4, 4)])
def test_chunk_bytes_rejects_invalid_inputs(message_bytes: int, p: int) -> None:
    with pytest.raises(ModelValidationError):
        chunk_bytes(message_bytes, p)


def test_transfer_rejects_self_copies_and_empty_payloads() -> None:
    with pytest.raises(ModelValidationError):
        Transfer(1, 1, 4, PayloadTag(1, 1))
    with pytest.raises(ModelValidationError):
        Transfer(0, 1, 0, PayloadTag(0, 1))


def test_build_schedule_dispatches_and_rejects_other_families() -> None:
    schedule = build_schedule(CollectiveKind.ALLTOALL, TopologyFamily.RING, 5, 10)

    assert schedule == build_ring_alltoall(5, 10)
    with pytest.raises(UnsupportedFamilyError):
        build_schedule(CollectiveKind.ALLREDUCE, TopologyFamily.HYBRID_CUBE_MESH, 8, 8)


def test_drop_step_removes_one_step() -> None:
    schedule = build_ring_allreduce(4, 8)

    mutant = drop_step(schedule, 2)

    assert len(mutant.steps) == 5
    assert mutant.steps[2] == schedule.steps[3]
    with pytest.raises(IndexError):
        drop_step(schedule, 6)


def test_trace_csv_lists_every_transfer() -> None:
    schedule = build_fc_alltoall(2, 4)

    assert schedule.to_trace_csv() == (
        "step_index,src,dst,bytes,tag\n0,0,1,2,o0:c1:h0\n0,1,0,2,o1:c0:h0\n"
    )
