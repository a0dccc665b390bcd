import numpy as np
import pytest

from accel_fabric.models import CollectiveKind, CollectiveParams, ModelValidationError
from accel_fabric.transport import (
    GDR,
    HOST_TCP,
    NON_GDR,
    TransportProfile,
    apply,
    gdr_speedup,
    profile_from_mapping,
    scaling_sweep,
    speedup_sweep,
)

B = 100e9
ALPHA = 1e-6


def _params(message_bytes: float = 256e6, p: int = 8) -> CollectiveParams:
    return CollectiveParams(p=p, message_bytes=message_bytes, bandwidth=B, alpha=ALPHA)


def test_apply_halves_bandwidth_and_adds_copy_latency() -> None:
    staged = TransportProfile("non_gdr", 0.5, 3e-6)

    result = apply(staged, _params())

    assert result.bandwidth == pytest.approx(50e9)
    assert result.alpha == pytest.approx(4e-6)
    assert result.p == 8
    assert result.message_bytes == 256e6


def test_apply_composes() -> None:
    staged = TransportProfile("staged", 0.5, 3e-6)

    twice = apply(staged, apply(staged, _params()))

    assert twice.bandwidth == pytest.approx(25e9)
    assert twice.alpha == pytest.approx(7e-6)


def test_gdr_is_the_identity() -> None:
    params = _params()

    assert apply(GDR, params) == params


def test_copy_bandwidth_charges_per_byte() -> None:
    profile = TransportProfile("pcie", 1.0, 0.0, copy_bandwidth=1e9)

    assert apply(profile, _params(message_bytes=1e6)).alpha == pytest.approx(ALPHA + 1e-3)


@pytest.mark.parametrize(
    ("factor", "latency", "copy_bandwidth"),
    [(0.0, 0.0, 0.0), (1.5, 0.0, 0.0), (0.5, -1e-6, 0.0), (0.5, 0.0, -1.0)],
)
def test_profile_validation(factor: float, latency: float, copy_bandwidth: float) -> None:
    with pytest.raises(ModelValidationError):
        TransportProfile("bad", factor, latency, copy_bandwidth)


def test_large_allreduce_speedup_approaches_two() -> None:
    speedup = gdr_speedup(CollectiveKind.ALLREDUCE, _params(message_bytes=256e6))

    assert speedup == pytest.approx(2.0, abs=0.05)


def test_small_allreduce_speedup_exceeds_two() -> None:
    staged = TransportProfile("non_gdr", 0.5, 3 * ALPHA)

    assert gdr_speedup(CollectiveKind.ALLREDUCE, _params(message_bytes=64e3), staged) > 2.0


@pytest.mark.parametrize("kind", list(CollectiveKind))
def test_speedup_decreases_with_message_size(kind: CollectiveKind) -> None:
    sizes = np.logspace(3, 9, 25).tolist()

    sweep = speedup_sweep(kind, _params(), sizes)

    speedups = [speedup for _, speedup in sweep.points]
    assert all(a >= b for a, b in zip(speedups, speedups[1:], strict=False))
    assert min(speedups) >= 1.0


def test_identical_profiles_have_no_speedup() -> None:
    assert gdr_speedup(CollectiveKind.ALLTOALL, _params(), GDR) == 1.0
    assert gdr_speedup(CollectiveKind.ALLREDUCE, _params(), HOST_TCP, gdr=HOST_TCP) == 1.0


def test_host_tcp_is_slower_than_non_gdr() -> None:
    params = _params(message_bytes=1e4)

    assert gdr_speedup(CollectiveKind.ALLREDUCE, params, HOST_TCP) > gdr_speedup(
        CollectiveKind.ALLREDUCE, params, NON_GDR
    )


def test_speedup_sweep_csv() -> None:
    sweep = speedup_sweep(CollectiveKind.ALLREDUCE, _params(), [256e6])

    header, row = sweep.to_csv().splitlines()
    assert header == "message_bytes,speedup"
    assert row.startswith("2.56e+08,2.00")
    assert sweep.to_dict()["axis"] == "message_bytes"


def test_scaling_sweep_keeps_message_size() -> None:
    sweep = scaling_sweep(CollectiveKind.ALLTOALL, _params(message_bytes=1e6), [2, 4, 8])

    assert sweep.axis == "p"
    assert [p for p, _ in sweep.points] == [2.0, 4.0, 8.0]
    assert all(speedup > 1.0 for _, speedup in sweep.points)


def test_sweeps_reject_empty_axes() -> None:
    with pytest.raises(ModelValidationError):
        speedup_sweep(CollectiveKind.ALLREDUCE, _params(), [])
    with pytest.raises(ModelValidationError):
        speedup_sweep(CollectiveKind.ALLREDUCE, _params(), np.array([]))
    with pytest.raises(ModelValidationError):
        scaling_sweep(CollectiveKind.ALLREDUCE, _params(), [])


def test_profile_from_mapping_accepts_names_and_objects() -> None:
    assert profile_from_mapping("NON_GDR") is NON_GDR
    custom = profile_from_mapping(
        {"name": "rdma_lite", "bandwidth_factor": 0.8, "copy_latency_s": 2e-6}
    )
    assert custom == TransportProfile("rdma_lite", 0.8, 2e-6)
    assert custom.to_dict()["copy_latency_s"] == 2e-6
    with pytest.raises(ModelValidationError):
        profile_from_mapping("carrier_pigeon")
