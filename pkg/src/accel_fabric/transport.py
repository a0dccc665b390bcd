"""Transport-path effects on collective cost: direct RDMA (GDR) vs host-staged paths."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Any, Final

from ._format import format_number, render_csv
from .analytic import Axis, collective_cost
from .models import (
    CollectiveKind,
    CollectiveParams,
    JsonMapping,
    ModelValidationError,
    TopologyFamily,
    as_float,
    ensure_required,
)

_LOGGER = logging.getLogger(__name__)

DEFAULT_COPY_LATENCY: Final[float] = 5e-6
SCALE_OUT_FAMILY: Final[TopologyFamily] = TopologyFamily.FULLY_CONNECTED


@dataclass(frozen=True, slots=True)
class TransportProfile:
    """How a transport path degrades the fabric seen by a collective.

    Attributes:
        name: Profile identifier used in reports.
        bandwidth_factor: Multiplier in ``(0, 1]`` applied to the per-node bandwidth.
        copy_latency: Extra seconds charged per message for staging copies.
        copy_bandwidth: Bytes/second of the staging copy; ``0`` disables the per-byte cost.
    """

    name: str
    bandwidth_factor: float
    copy_latency: float = 0.0
    copy_bandwidth: float = 0.0

    def __post_init__(self) -> None:
        """Validate the profile envelope."""
        if not self.name:
            raise ModelValidationError("TransportProfile.name must be populated")
        if not 0 < self.bandwidth_factor <= 1:
            raise ModelValidationError(
                f"{self.name}: bandwidth_factor must be in (0, 1], got {self.bandwidth_factor}"
            )
        if self.copy_latency < 0:
            raise ModelValidationError(f"{self.name}: copy_latency must be non-negative")
        if self.copy_bandwidth < 0:
            raise ModelValidationError(f"{self.name}: copy_bandwidth must be non-negative")

    @classmethod
    def from_mapping(cls, payload: JsonMapping) -> TransportProfile:
        """Build a profile from ``{name, bandwidth_factor, copy_latency_s, copy_bandwidth}``."""
        return cls(
            name=str(ensure_required(payload, "name")),
            bandwidth_factor=as_float(payload.get("bandwidth_factor", 1.0), "bandwidth_factor"),
            copy_latency=as_float(payload.get("copy_latency_s", 0.0), "copy_latency_s"),
            copy_bandwidth=as_float(payload.get("copy_bandwidth", 0.0), "copy_bandwidth"),
        )

    def to_dict(self) -> dict[str, Any]:
        """Return the profile in its config document form."""
        return {
            "name": self.name,
            "bandwidth_factor": self.bandwidth_factor,
            "copy_latency_s": self.copy_latency,
            "copy_bandwidth": self.copy_bandwidth,
        }


GDR: Final[TransportProfile] = TransportProfile("gdr", 1.0)
# Send/recv flows cross the host PCIe link twice, halving usable bandwidth.
NON_GDR: Final[TransportProfile] = TransportProfile("non_gdr", 0.5, DEFAULT_COPY_LATENCY)
# Kernel TCP/IP: two host copies instead of one.
HOST_TCP: Final[TransportProfile] = TransportProfile("host_tcp", 0.5, 2 * DEFAULT_COPY_LATENCY)

TRANSPORT_PRESETS: Final[dict[str, TransportProfile]] = {
    profile.name: profile for profile in (GDR, NON_GDR, HOST_TCP)
}


def profile_from_mapping(payload: JsonMapping | str) -> TransportProfile:
    """Return a preset by name or build a custom profile from a config object."""
    if isinstance(payload, str):
        try:
            return TRANSPORT_PRESETS[payload.strip().lower()]
        except KeyError:
            raise ModelValidationError(f"Unknown transport preset: {payload!r}") from None
    return TransportProfile.from_mapping(payload)


def apply(profile: TransportProfile, params: CollectiveParams) -> CollectiveParams:
    """Return ``params`` as seen through ``profile``.

    ``B' = B * bandwidth_factor`` and ``alpha' = alpha + copy_latency`` plus
    ``M / copy_bandwidth`` when a staging bandwidth is set. ``p`` and ``M`` are unchanged.
    """
    staging = params.message_bytes / profile.copy_bandwidth if profile.copy_bandwidth else 0.0
    return replace(
        params,
        bandwidth=params.bandwidth * profile.bandwidth_factor,
        alpha=params.alpha + profile.copy_latency + staging,
    )


def gdr_speedup(
    kind: CollectiveKind,
    params: CollectiveParams,
    nongdr: TransportProfile = NON_GDR,
    *,
    gdr: TransportProfile = GDR,
) -> float:
    """Return ``T(nongdr) / T(gdr)`` for ``kind`` on the fully connected scale-out model."""
    slow = collective_cost(kind, SCALE_OUT_FAMILY, apply(nongdr, params))
    fast = collective_cost(kind, SCALE_OUT_FAMILY, apply(gdr, params))
    return slow.total / fast.total


@dataclass(frozen=True, slots=True)
class SpeedupSweep:
    """GDR speedup evaluated along one axis (message size or node count)."""

    axis: str
    points: tuple[tuple[float, float], ...]

    def to_csv(self) -> str:
        """Render ``<axis>,speedup`` rows with 6 significant digits."""
        rows = ([format_number(x), format_number(speedup)] for x, speedup in self.points)
        return render_csv([self.axis, "speedup"], rows)

    def to_dict(self) -> dict[str, Any]:
        """Return ``{axis, points}`` with points as ``[x, speedup]`` pairs."""
        return {"axis": self.axis, "points": [list(point) for point in self.points]}


def speedup_sweep(
    kind: CollectiveKind,
    params: CollectiveParams,
    message_sizes: Axis,
    nongdr: TransportProfile = NON_GDR,
) -> SpeedupSweep:
    """Evaluate :func:`gdr_speedup` at each message size, keeping ``p``, ``B`` and ``alpha``."""
    if len(message_sizes) == 0:
        raise ModelValidationError("speedup_sweep needs at least one message size")
    points = tuple(
        (float(size), gdr_speedup(kind, replace(params, message_bytes=float(size)), nongdr))
        for size in message_sizes
    )
    _LOGGER.debug(
        "transport.speedup_sweep",
        extra={"kind": str(kind), "profile": nongdr.name, "points": len(points)},
    )
    return SpeedupSweep(axis="message_bytes", points=points)


def scaling_sweep(
    kind: CollectiveKind,
    params: CollectiveParams,
    node_counts: Sequence[int],
    nongdr: TransportProfile = NON_GDR,
) -> SpeedupSweep:
    """Evaluate :func:`gdr_speedup` at each node count, keeping ``M``, ``B`` and ``alpha``."""
    if len(node_counts) == 0:
        raise ModelValidationError("scaling_sweep needs at least one node count")
    points = tuple(
        (float(p), gdr_speedup(kind, replace(params, p=int(p)), nongdr)) for p in node_counts
    )
    return SpeedupSweep(axis="p", points=points)


__all__ = [
    "DEFAULT_COPY_LATENCY",
    "GDR",
    "HOST_TCP",
    "NON_GDR",
    "TRANSPORT_PRESETS",
    "SpeedupSweep",
    "TransportProfile",
    "apply",
    "gdr_speedup",
    "profile_from_mapping",
    "scaling_sweep",
    "speedup_sweep",
]
