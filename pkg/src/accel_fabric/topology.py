"""Accelerator fabric topologies: construction, hop metrics, bisection and system presets."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Final

import networkx as nx

from .models import (
    JsonMapping,
    ModelValidationError,
    TopologyFamily,
    as_float,
    as_int,
    ensure_required,
)

_LOGGER = logging.getLogger(__name__)

HYBRID_CUBE_MESH_NODES: Final[int] = 8
MIN_TORUS_SIDE: Final[int] = 3
UNDIFFERENTIATED: Final[str] = "undifferentiated"
PRESET_NAMES: Final[tuple[str, ...]] = ("DGX-1", "DGX-Pod", "Zion", "HLS-1", "TPU")
FLAT_PRESET: Final[str] = "TPU"


class UnsupportedSizeError(ModelValidationError):
    """Raised when a node count does not fit the requested topology family."""


class NonPositiveBandwidthError(ModelValidationError):
    """Raised when a node or link bandwidth is not strictly positive."""


class OddNodeCountError(ModelValidationError):
    """Raised when an equal bipartition is requested for an odd node count."""


class FlatTopologyError(ModelValidationError):
    """Raised when a flat system is asked for its local/global bandwidth split."""


@dataclass(frozen=True, slots=True, order=True)
class Link:
    """Directed channel between two nodes with capacity in bytes/second."""

    src: int
    dst: int
    bandwidth: float

    def __post_init__(self) -> None:
        """Validate endpoints and capacity."""
        if self.src < 0 or self.dst < 0:
            raise ModelValidationError("Link endpoints must be non-negative node ids")
        if self.src == self.dst:
            raise ModelValidationError(f"Link {self.src}->{self.dst} is a self loop")
        if self.bandwidth <= 0:
            raise NonPositiveBandwidthError(f"Link {self.src}->{self.dst} has no bandwidth")


@dataclass(frozen=True, slots=True)
class Topology:
    """Immutable node/link graph of an accelerator fabric.

    Attributes:
        family: Topology family the graph was built from.
        p: Number of nodes, identified as ``0..p-1``.
        node_bandwidth: Budget ``B`` (bytes/second) each node may drive in one step.
        links: Directed links sorted by ``(src, dst)``.
    """

    family: TopologyFamily
    p: int
    node_bandwidth: float
    links: tuple[Link, ...]
    _graph: nx.DiGraph[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Check link validity and strong connectivity, then freeze the graph."""
        if self.node_bandwidth <= 0:
            raise NonPositiveBandwidthError("Topology.node_bandwidth must be positive")
        graph: nx.DiGraph[int] = nx.DiGraph()
        graph.add_nodes_from(range(self.p))
        for link in self.links:
            if link.src >= self.p or link.dst >= self.p:
                raise ModelValidationError(f"Link {link.src}->{link.dst} leaves the node range")
            if graph.has_edge(link.src, link.dst):
                raise ModelValidationError(f"Duplicate link {link.src}->{link.dst}")
            graph.add_edge(link.src, link.dst, bandwidth=link.bandwidth)
        if not nx.is_strongly_connected(graph):
            raise ModelValidationError(f"{self.family} topology is not strongly connected")
        object.__setattr__(self, "_graph", nx.freeze(graph))

    @property
    def graph(self) -> nx.DiGraph[int]:
        """Frozen ``networkx`` view of the fabric; edges carry a ``bandwidth`` attribute."""
        return self._graph

    def has_link(self, src: int, dst: int) -> bool:
        """Return ``True`` when ``src -> dst`` is a direct link."""
        return bool(self._graph.has_edge(src, dst))

    def link_bandwidth(self, src: int, dst: int) -> float:
        """Return the capacity of ``src -> dst``; raises ``KeyError`` for missing links."""
        return float(self._graph.edges[src, dst]["bandwidth"])

    def validate_node(self, node: int) -> None:
        """Raise ``ModelValidationError`` when ``node`` is outside ``0..p-1``."""
        if not 0 <= node < self.p:
            raise ModelValidationError(f"Node {node} is not in [0, {self.p})")


def _ring_pairs(p: int) -> set[tuple[int, int]]:
    pairs: set[tuple[int, int]] = set()
    for node in range(p):
        successor = (node + 1) % p
        pairs.add((node, successor))
        pairs.add((successor, node))
    return pairs


def _ring_links(p: int, bandwidth: float) -> list[Link]:
    # Each directed ring channel carries the full node budget.
    return [Link(src, dst, bandwidth) for src, dst in _ring_pairs(p)]


def _fully_connected_links(p: int, bandwidth: float) -> list[Link]:
    per_channel = bandwidth / (p - 1)
    return [Link(src, dst, per_channel) for src in range(p) for dst in range(p) if src != dst]


def _hybrid_cube_mesh_links(p: int, bandwidth: float) -> list[Link]:
    if p != HYBRID_CUBE_MESH_NODES:
        raise UnsupportedSizeError(f"hybrid_cube_mesh requires p={HYBRID_CUBE_MESH_NODES}, got {p}")
    # Two fully connected quads (xor 1, 2, 3) joined by cube edges (xor 4).
    masks = (1, 2, 3, 4)
    per_channel = bandwidth / len(masks)
    return [Link(node, node ^ mask, per_channel) for node in range(p) for mask in masks]


def _torus_side(p: int) -> int:
    side = math.isqrt(p)
    if side * side != p or side < MIN_TORUS_SIDE:
        raise UnsupportedSizeError(f"torus_2d requires a perfect square p >= 9, got {p}")
    return side


def _torus_links(p: int, bandwidth: float) -> list[Link]:
    side = _torus_side(p)
    pairs: set[tuple[int, int]] = set()
    for row in range(side):
        for col in range(side):
            node = row * side + col
            pairs.add((node, ((row + 1) % side) * side + col))
            pairs.add((node, ((row - 1) % side) * side + col))
            pairs.add((node, row * side + (col + 1) % side))
            pairs.add((node, row * side + (col - 1) % side))
    per_channel = bandwidth / 4
    return [Link(src, dst, per_channel) for src, dst in pairs]


_BUILDERS: Final[dict[TopologyFamily, Callable[[int, float], list[Link]]]] = {
    TopologyFamily.RING: _ring_links,
    TopologyFamily.FULLY_CONNECTED: _fully_connected_links,
    TopologyFamily.HYBRID_CUBE_MESH: _hybrid_cube_mesh_links,
    TopologyFamily.TORUS_2D: _torus_links,
}


def build_topology(family: TopologyFamily, p: int, bandwidth: float) -> Topology:
    """Build a topology of ``family`` with ``p`` nodes and per-node budget ``bandwidth``.

    Ring links carry the full budget ``B``; fully connected links carry ``B/(p-1)``;
    hybrid cube mesh and 2D torus links split ``B`` across the four neighbours.

    Raises:
        UnsupportedSizeError: If ``p`` does not fit the family.
        NonPositiveBandwidthError: If ``bandwidth`` is not positive.
    """
    if bandwidth <= 0:
        raise NonPositiveBandwidthError(f"Node bandwidth must be positive, got {bandwidth}")
    if p < 2:  # noqa: PLR2004
        raise UnsupportedSizeError(f"Topologies need at least 2 nodes, got {p}")
    links = _BUILDERS[family](p, bandwidth)
    topology = Topology(family=family, p=p, node_bandwidth=bandwidth, links=tuple(sorted(links)))
    _LOGGER.debug(
        "topology.build",
        extra={"family": str(family), "p": p, "links": len(topology.links)},
    )
    return topology


@dataclass(frozen=True, slots=True)
class TopologySpec:
    """Scenario description of a topology, kept separate so single-device plans can exist."""

    family: TopologyFamily
    p: int
    node_bandwidth: float

    def __post_init__(self) -> None:
        """Validate the node count and bandwidth budget."""
        if self.p < 1:
            raise UnsupportedSizeError(f"A topology needs at least 1 node, got {self.p}")
        if self.node_bandwidth <= 0:
            raise NonPositiveBandwidthError(
                f"Node bandwidth must be positive, got {self.node_bandwidth}"
            )

    @classmethod
    def from_mapping(cls, payload: JsonMapping) -> TopologySpec:
        """Parse a ``{family, p, node_bandwidth}`` config object."""
        return cls(
            family=TopologyFamily.parse(ensure_required(payload, "family")),
            p=as_int(ensure_required(payload, "p"), "p"),
            node_bandwidth=as_float(ensure_required(payload, "node_bandwidth"), "node_bandwidth"),
        )

    def to_dict(self) -> dict[str, Any]:
        """Return the spec in its config document form."""
        return {"family": str(self.family), "p": self.p, "node_bandwidth": self.node_bandwidth}

    def build(self) -> Topology:
        """Return the concrete topology."""
        return build_topology(self.family, self.p, self.node_bandwidth)


def topology_from_mapping(payload: JsonMapping) -> Topology:
    """Build a topology from a ``{family, p, node_bandwidth}`` config object."""
    return TopologySpec.from_mapping(payload).build()


def hop_count(topology: Topology, a: int, b: int) -> int:
    """Return the length of the shortest directed path from ``a`` to ``b``."""
    topology.validate_node(a)
    topology.validate_node(b)
    return int(nx.shortest_path_length(topology.graph, a, b))


def neighbors(topology: Topology, node: int) -> tuple[int, ...]:
    """Return the direct successors of ``node`` in ascending order."""
    topology.validate_node(node)
    return tuple(sorted(topology.graph.successors(node)))


def gamma(p: int) -> int:
    """Return the ring alltoall hop-step count for ``p`` nodes.

    With ``q = (p-1) // 2`` and ``r = (p-1) % 2`` the count is ``2 * sum(1..q) + r * p / 2``;
    ``r`` is only non-zero for even ``p`` so the result is always integral.
    """
    if p < 2:  # noqa: PLR2004
        raise ModelValidationError(f"gamma requires p >= 2, got {p}")
    quotient, remainder = divmod(p - 1, 2)
    return quotient * (quotient + 1) + remainder * (p // 2)


def _pair_hops(topology: Topology) -> Iterator[int]:
    for src, lengths in nx.all_pairs_shortest_path_length(topology.graph):
        for dst, hops in lengths.items():
            if src != dst:
                yield int(hops)


def diameter(topology: Topology) -> int:
    """Return the largest hop count between any ordered pair of distinct nodes."""
    return max(_pair_hops(topology))


def average_hops(topology: Topology) -> Fraction:
    """Return the mean hop count over all ordered pairs of distinct nodes, exactly."""
    pairs = topology.p * (topology.p - 1)
    return Fraction(sum(_pair_hops(topology)), pairs)


def _candidate_cuts(topology: Topology) -> Iterator[set[int]]:
    p = topology.p
    half = p // 2
    if topology.family is TopologyFamily.TORUS_2D:
        side = _torus_side(p)
        for start in range(side):
            band = {(start + offset) % side for offset in range(side // 2)}
            yield {row * side + col for row in band for col in range(side)}
            yield {row * side + col for row in range(side) for col in band}
        return
    for start in range(p):
        yield {(start + offset) % p for offset in range(half)}


def bisection_bandwidth(topology: Topology) -> float:
    """Return the minimum link bandwidth crossing a canonical equal bipartition.

    Ring, fully connected and hybrid cube mesh fabrics are cut into contiguous halves of the
    node index order; 2D tori use axis-aligned cuts. Both directions of every crossing link
    count toward the total.

    Raises:
        OddNodeCountError: If ``p`` is odd.
    """
    if topology.p % 2:
        raise OddNodeCountError(f"Bisection needs an even node count, got {topology.p}")
    nodes = set(range(topology.p))
    return min(
        float(nx.cut_size(topology.graph, cut, nodes - cut, weight="bandwidth"))
        for cut in _candidate_cuts(topology)
    )


def describe(topology: Topology) -> dict[str, Any]:
    """Return a JSON-compatible summary of ``topology`` for reports."""
    bisection = None if topology.p % 2 else bisection_bandwidth(topology)
    mean_hops = average_hops(topology)
    return {
        "family": str(topology.family),
        "p": topology.p,
        "node_bandwidth": topology.node_bandwidth,
        "links": len(topology.links),
        "max_degree": max(len(neighbors(topology, node)) for node in range(topology.p)),
        "diameter": diameter(topology),
        "average_hops": float(mean_hops),
        "bisection_bandwidth": bisection,
    }


@dataclass(frozen=True, slots=True)
class SystemPreset:
    """Local vs global bandwidth envelope of a scale-out training system.

    Attributes:
        name: System name, one of :data:`PRESET_NAMES`.
        local_bandwidth: Bytes/second each node has for intra-supernode traffic.
        global_bandwidth: Aggregate scale-out bytes/second of one supernode.
        global_share_count: Number of nodes sharing ``global_bandwidth``.
        flat: ``True`` when the fabric has no local/global distinction.
    """

    name: str
    local_bandwidth: float
    global_bandwidth: float
    global_share_count: int
    flat: bool = False

    def __post_init__(self) -> None:
        """Validate the preset envelope."""
        if self.name not in PRESET_NAMES:
            raise ModelValidationError(f"Unknown system preset {self.name!r}")
        if self.local_bandwidth <= 0 or self.global_bandwidth <= 0:
            raise NonPositiveBandwidthError(f"{self.name}: bandwidths must be positive")
        if self.global_share_count < 1:
            raise ModelValidationError(f"{self.name}: share_count must be at least 1")
        if self.flat != (self.name == FLAT_PRESET):
            raise ModelValidationError(f"{self.name}: only {FLAT_PRESET} is a flat system")

    @classmethod
    def from_mapping(cls, payload: JsonMapping) -> SystemPreset:
        """Build a preset from ``{name, local_bw, global_bw, share_count, flat}``."""
        return cls(
            name=str(ensure_required(payload, "name")),
            local_bandwidth=as_float(ensure_required(payload, "local_bw"), "local_bw"),
            global_bandwidth=as_float(ensure_required(payload, "global_bw"), "global_bw"),
            global_share_count=as_int(payload.get("share_count", 1), "share_count"),
            flat=bool(payload.get("flat", False)),
        )

    def to_dict(self) -> dict[str, Any]:
        """Return the preset in its config document form."""
        return {
            "name": self.name,
            "local_bw": self.local_bandwidth,
            "global_bw": self.global_bandwidth,
            "share_count": self.global_share_count,
            "flat": self.flat,
        }


_GBPS: Final[float] = 1e9 / 8

SYSTEM_PRESETS: Final[Mapping[str, SystemPreset]] = {
    # 300 GB/s NVLink per GPU; 4x100 Gbps InfiniBand shared by 8 GPUs.
    "DGX-1": SystemPreset("DGX-1", 300e9, 4 * 100 * _GBPS, 8),
    # More scale-out links shared by more GPUs; same order of magnitude as DGX-1.
    "DGX-Pod": SystemPreset("DGX-Pod", 300e9, 8 * 100 * _GBPS, 16),
    # 8 CPU NICs at 100 GbE provide the scale-out bandwidth of 8 accelerators.
    "Zion": SystemPreset("Zion", 200e9, 8 * 100 * _GBPS, 8),
    # 10x100 GbE RoCE per accelerator: 7 channels local, 3 scale-out.
    "HLS-1": SystemPreset("HLS-1", 7 * 100 * _GBPS, 8 * 3 * 100 * _GBPS, 8),
    "TPU": SystemPreset("TPU", 280e9, 280e9, 1, flat=True),
}


def load_presets(overrides: Sequence[JsonMapping] = ()) -> dict[str, SystemPreset]:
    """Return built-in presets with ``overrides`` replacing entries of the same name."""
    presets = dict(SYSTEM_PRESETS)
    for payload in overrides:
        preset = SystemPreset.from_mapping(payload)
        presets[preset.name] = preset
    return {name: presets[name] for name in PRESET_NAMES if name in presets}


def local_global_fractions(preset: SystemPreset) -> tuple[float, float]:
    """Return ``(local_fraction, global_fraction)`` of a supernode's total bandwidth.

    Raises:
        FlatTopologyError: For flat systems, whose split is :data:`UNDIFFERENTIATED`.
    """
    if preset.flat:
        raise FlatTopologyError(f"{preset.name} is {UNDIFFERENTIATED}: flat fabric")
    local_total = preset.local_bandwidth * preset.global_share_count
    total = local_total + preset.global_bandwidth
    return local_total / total, preset.global_bandwidth / total


__all__ = [
    "PRESET_NAMES",
    "SYSTEM_PRESETS",
    "UNDIFFERENTIATED",
    "FlatTopologyError",
    "Link",
    "NonPositiveBandwidthError",
    "OddNodeCountError",
    "SystemPreset",
    "Topology",
    "TopologySpec",
    "UnsupportedSizeError",
    "average_hops",
    "bisection_bandwidth",
    "build_topology",
    "describe",
    "diameter",
    "gamma",
    "hop_count",
    "load_presets",
    "local_global_fractions",
    "neighbors",
    "topology_from_mapping",
]
