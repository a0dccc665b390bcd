from fractions import Fraction

import pytest

from accel_fabric.models import ModelValidationError, TopologyFamily
from accel_fabric.topology import (
    SYSTEM_PRESETS,
    FlatTopologyError,
    Link,
    NonPositiveBandwidthError,
    OddNodeCountError,
    Topology,
    TopologySpec,
    UnsupportedSizeError,
    average_hops,
    bisection_bandwidth,
    build_topology,
    describe,
    diameter,
    gamma,
    hop_count,
    load_presets,
    local_global_fractions,
    neighbors,
    topology_from_mapping,
)

B = 100e9


def _out_bandwidth(topology: Topology, node: int) -> float:
    return sum(link.bandwidth for link in topology.links if link.src == node)


def test_fully_connected_has_thin_channels() -> None:
    topology = build_topology(TopologyFamily.FULLY_CONNECTED, 8, B)

    assert len(topology.links) == 56
    assert all(link.bandwidth == pytest.approx(B / 7) for link in topology.links)
    for node in range(8):
        assert _out_bandwidth(topology, node) == pytest.approx(B, rel=1e-12)


def test_ring_has_fat_channels() -> None:
    topology = build_topology(TopologyFamily.RING, 8, B)

    assert len(topology.links) == 16
    assert {link.bandwidth for link in topology.links} == {B}
    assert neighbors(topology, 0) == (1, 7)


def test_two_node_ring_is_a_single_bidirectional_pair() -> None:
    topology = build_topology(TopologyFamily.RING, 2, 1.0)

    assert topology.links == (Link(0, 1, 1.0), Link(1, 0, 1.0))


def test_links_are_sorted() -> None:
    topology = build_topology(TopologyFamily.TORUS_2D, 9, B)

    assert list(topology.links) == sorted(topology.links)


@pytest.mark.parametrize(
    ("family", "p"),
    [
        (TopologyFamily.RING, 1),
        (TopologyFamily.HYBRID_CUBE_MESH, 6),
        (TopologyFamily.TORUS_2D, 8),
        (TopologyFamily.TORUS_2D, 4),
    ],
)
def test_build_topology_rejects_unsupported_sizes(family: TopologyFamily, p: int) -> None:
    with pytest.raises(UnsupportedSizeError):
        build_topology(family, p, B)


def test_build_topology_rejects_non_positive_bandwidth() -> None:
    with pytest.raises(NonPositiveBandwidthError):
        build_topology(TopologyFamily.RING, 4, 0.0)


def test_topology_rejects_disconnected_graph() -> None:
    with pytest.raises(ModelValidationError, match="strongly connected"):
        Topology(TopologyFamily.RING, 3, 1.0, (Link(0, 1, 1.0), Link(1, 0, 1.0)))


def test_topology_rejects_duplicate_links() -> None:
    links = (Link(0, 1, 1.0), Link(0, 1, 2.0), Link(1, 0, 1.0))
    with pytest.raises(ModelValidationError, match="Duplicate"):
        Topology(TopologyFamily.RING, 2, 1.0, links)


def test_hop_count_examples() -> None:
    ring = build_topology(TopologyFamily.RING, 8, B)
    fully_connected = build_topology(TopologyFamily.FULLY_CONNECTED, 8, B)

    assert hop_count(ring, 0, 4) == 4
    assert hop_count(ring, 3, 3) == 0
    assert all(hop_count(fully_connected, a, b) == 1 for a in range(8) for b in range(8) if a != b)


def test_hop_count_rejects_unknown_nodes() -> None:
    ring = build_topology(TopologyFamily.RING, 4, B)
    with pytest.raises(ModelValidationError):
        hop_count(ring, 0, 4)


@pytest.mark.parametrize(
    ("family", "p"),
    [
        (TopologyFamily.RING, 7),
        (TopologyFamily.FULLY_CONNECTED, 5),
        (TopologyFamily.TORUS_2D, 16),
    ],
)
def test_hop_count_is_symmetric(family: TopologyFamily, p: int) -> None:
    topology = build_topology(family, p, B)

    for a in range(p):
        for b in range(p):
            assert hop_count(topology, a, b) == hop_count(topology, b, a)


@pytest.mark.parametrize("p", range(2, 13))
def test_ring_diameter_is_half_the_ring(p: int) -> None:
    assert diameter(build_topology(TopologyFamily.RING, p, B)) == p // 2
    assert diameter(build_topology(TopologyFamily.FULLY_CONNECTED, p, B)) == 1


def test_average_hops_is_exact() -> None:
    assert average_hops(build_topology(TopologyFamily.FULLY_CONNECTED, 8, B)) == 1
    assert average_hops(build_topology(TopologyFamily.RING, 8, B)) == Fraction(16, 7)
    assert average_hops(build_topology(TopologyFamily.HYBRID_CUBE_MESH, 8, B)) == Fraction(10, 7)
    assert average_hops(build_topology(TopologyFamily.TORUS_2D, 9, B)) == Fraction(3, 2)


def test_torus_and_hybrid_cube_mesh_diameters() -> None:
    assert diameter(build_topology(TopologyFamily.TORUS_2D, 9, B)) == 2
    assert diameter(build_topology(TopologyFamily.HYBRID_CUBE_MESH, 8, B)) == 2


@pytest.mark.parametrize(
    ("p", "expected"),
    [(2, 1), (3, 2), (4, 4), (5, 6), (8, 16)],
)
def test_gamma_values(p: int, expected: int) -> None:
    assert gamma(p) == expected


def test_gamma_over_p_minus_one_for_eight_nodes() -> None:
    assert gamma(8) / 7 == pytest.approx(2.2857142857, abs=1e-6)


def test_gamma_rejects_single_node() -> None:
    with pytest.raises(ModelValidationError):
        gamma(1)


@pytest.mark.parametrize(
    ("family", "p", "bandwidth", "expected"),
    [
        (TopologyFamily.RING, 8, B, 4 * B),
        (TopologyFamily.RING, 2, 1.0, 2.0),
        (TopologyFamily.FULLY_CONNECTED, 8, B, 32 * (B / 7)),
        (TopologyFamily.HYBRID_CUBE_MESH, 8, B, 2 * B),
        (TopologyFamily.TORUS_2D, 16, B, 4 * B),
    ],
)
def test_bisection_bandwidth(
    family: TopologyFamily, p: int, bandwidth: float, expected: float
) -> None:
    topology = build_topology(family, p, bandwidth)

    assert bisection_bandwidth(topology) == pytest.approx(expected)


def test_bisection_bandwidth_rejects_odd_node_count() -> None:
    with pytest.raises(OddNodeCountError):
        bisection_bandwidth(build_topology(TopologyFamily.RING, 7, B))


def test_describe_summarizes_topology() -> None:
    summary = describe(build_topology(TopologyFamily.RING, 5, 1.0))

    assert summary == {
        "family": "ring",
        "p": 5,
        "node_bandwidth": 1.0,
        "links": 10,
        "max_degree": 2,
        "diameter": 2,
        "average_hops": 1.5,
        "bisection_bandwidth": None,
    }


def test_topology_from_mapping() -> None:
    topology = topology_from_mapping({"family": "FullyConnected", "p": 4, "node_bandwidth": 3.0})

    assert topology.family is TopologyFamily.FULLY_CONNECTED
    assert topology.link_bandwidth(0, 3) == pytest.approx(1.0)


def test_topology_spec_allows_single_device_but_not_building_it() -> None:
    spec = TopologySpec.from_mapping({"family": "ring", "p": 1, "node_bandwidth": 1.0})

    assert spec.to_dict() == {"family": "ring", "p": 1, "node_bandwidth": 1.0}
    with pytest.raises(UnsupportedSizeError):
        spec.build()


def test_hls1_fractions_are_exact() -> None:
    assert local_global_fractions(SYSTEM_PRESETS["HLS-1"]) == (0.7, 0.3)


def test_dgx1_global_fraction() -> None:
    _, global_fraction = local_global_fractions(SYSTEM_PRESETS["DGX-1"])

    assert global_fraction == pytest.approx(0.0204, abs=5e-4)
    assert global_fraction == pytest.approx(50 / 2450)


def test_fractions_sum_to_one_for_non_flat_presets() -> None:
    for preset in SYSTEM_PRESETS.values():
        if preset.flat:
            continue
        local, global_ = local_global_fractions(preset)
        assert local + global_ == pytest.approx(1.0)


def test_tpu_is_undifferentiated() -> None:
    with pytest.raises(FlatTopologyError, match="undifferentiated"):
        local_global_fractions(SYSTEM_PRESETS["TPU"])


def test_load_presets_merges_overrides_by_name() -> None:
    presets = load_presets(
        [{"name": "Zion", "local_bw": 100.0, "global_bw": 100.0, "share_count": 1}]
    )

    assert list(presets) == ["DGX-1", "DGX-Pod", "Zion", "HLS-1", "TPU"]
    assert local_global_fractions(presets["Zion"]) == (0.5, 0.5)


def test_only_tpu_may_be_flat() -> None:
    with pytest.raises(ModelValidationError):
        load_presets([{"name": "Zion", "local_bw": 1.0, "global_bw": 1.0, "flat": True}])
