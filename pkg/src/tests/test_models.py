from typing import Any

import pytest

from accel_fabric.models import (
    CollectiveKind,
    CollectiveParams,
    CostBreakdown,
    ModelValidationError,
    TopologyFamily,
    as_int,
    as_int_list,
    ensure_required,
)


@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("ring", TopologyFamily.RING),
        ("FullyConnected", TopologyFamily.FULLY_CONNECTED),
        ("fc", TopologyFamily.FULLY_CONNECTED),
        ("fully_connected", TopologyFamily.FULLY_CONNECTED),
        ("Hybrid-Cube-Mesh", TopologyFamily.HYBRID_CUBE_MESH),
        ("Torus2D", TopologyFamily.TORUS_2D),
    ],
)
def test_topology_family_parse_accepts_aliases(raw: str, expected: TopologyFamily) -> None:
    assert TopologyFamily.parse(raw) is expected


def test_topology_family_parse_rejects_unknown() -> None:
    with pytest.raises(ModelValidationError, match="Unknown topology family"):
        TopologyFamily.parse("dragonfly")


def test_collective_kind_parse_is_case_insensitive() -> None:
    assert CollectiveKind.parse(" AllToAll ") is CollectiveKind.ALLTOALL
    with pytest.raises(ModelValidationError):
        CollectiveKind.parse("broadcast")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"p": 1, "message_bytes": 1.0, "bandwidth": 1.0},
        {"p": 8, "message_bytes": -1.0, "bandwidth": 1.0},
        {"p": 8, "message_bytes": 1.0, "bandwidth": 0.0},
        {"p": 8, "message_bytes": 1.0, "bandwidth": 1.0, "alpha": -1e-9},
    ],
)
def test_collective_params_rejects_invalid_envelope(kwargs: dict[str, Any]) -> None:
    with pytest.raises(ModelValidationError):
        CollectiveParams(**kwargs)


def test_collective_params_dict_uses_model_symbols() -> None:
    params = CollectiveParams(8, 1e7, 1e11, 1e-6)

    assert params.to_dict() == {"p": 8, "M": 1e7, "B": 1e11, "alpha": 1e-6}


def test_cost_breakdown_total_and_dict() -> None:
    cost = CostBreakdown(bandwidth_term=2.0, latency_term=0.5)

    assert cost.total == 2.5
    assert cost.to_dict() == {"bandwidth_term_s": 2.0, "latency_term_s": 0.5, "total_s": 2.5}


def test_cost_breakdown_rejects_negative_terms() -> None:
    with pytest.raises(ModelValidationError):
        CostBreakdown(bandwidth_term=-1.0, latency_term=0.0)


def test_as_int_rejects_booleans_and_fractions() -> None:
    assert as_int(4.0, "p") == 4
    with pytest.raises(ModelValidationError):
        as_int(True, "p")
    with pytest.raises(ModelValidationError):
        as_int(1.5, "p")


def test_as_int_list_rejects_strings() -> None:
    assert as_int_list([4, 2], "mlp") == (4, 2)
    with pytest.raises(ModelValidationError):
        as_int_list("42", "mlp")


def test_ensure_required_rejects_empty_values() -> None:
    with pytest.raises(ModelValidationError, match="'name'"):
        ensure_required({"name": ""}, "name")
