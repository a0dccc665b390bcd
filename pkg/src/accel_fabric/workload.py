"""DLRM-derived communication demand, embedding placement, and end-to-end estimates."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from typing import Any, Final

from .analytic import collective_cost
from .models import (
    CollectiveKind,
    CollectiveParams,
    JsonMapping,
    ModelValidationError,
    TopologyFamily,
    as_float,
    as_int,
    as_int_list,
    ensure_required,
)
from .transport import TransportProfile, apply

_LOGGER = logging.getLogger(__name__)


class DeviceRole(StrEnum):
    """Where embedding tables live."""

    CPU = "cpu"
    ACCELERATOR = "accelerator"


class CapacityExceededError(ModelValidationError):
    """Raised when the tables assigned to a device do not fit its memory."""

    def __init__(self, device: int, required: int, available: float) -> None:
        """Record the overflowing device and its byte counts."""
        super().__init__(
            f"device {device} needs {required} bytes of table memory, {available:.6g} available"
        )
        self.device = device
        self.required = required
        self.available = available

    def context(self) -> dict[str, Any]:
        """Return error metadata useful for logging and reports."""
        return {"device": self.device, "required": self.required, "available": self.available}


@dataclass(frozen=True, slots=True)
class DlrmConfig:
    """Shape of a deep learning recommendation model iteration.

    Attributes:
        num_tables: Number of embedding tables.
        rows_per_table: Vectors per table.
        emb_dim: Elements per embedding vector.
        bottom_mlp: Layer widths of the dense-feature MLP.
        top_mlp: Layer widths of the interaction MLP.
        minibatch: Samples per iteration.
        bytes_per_element: Element size, e.g. ``4`` for fp32.
        lookups_per_sample: Pooled lookup results per table per sample.
    """

    num_tables: int
    rows_per_table: int
    emb_dim: int
    bottom_mlp: tuple[int, ...]
    top_mlp: tuple[int, ...]
    minibatch: int
    bytes_per_element: int
    lookups_per_sample: int = 1

    def __post_init__(self) -> None:
        """Validate that every dimension is positive and the MLPs are non-empty."""
        for name in (
            "num_tables",
            "rows_per_table",
            "emb_dim",
            "minibatch",
            "bytes_per_element",
            "lookups_per_sample",
        ):
            if getattr(self, name) <= 0:
                raise ModelValidationError(f"DlrmConfig.{name} must be positive")
        for name in ("bottom_mlp", "top_mlp"):
            widths = getattr(self, name)
            if not widths:
                raise ModelValidationError(f"DlrmConfig.{name} must not be empty")
            if any(width <= 0 for width in widths):
                raise ModelValidationError(f"DlrmConfig.{name} widths must be positive")

    @property
    def table_bytes(self) -> int:
        """Memory footprint of one embedding table."""
        return self.rows_per_table * self.emb_dim * self.bytes_per_element

    @classmethod
    def from_mapping(cls, payload: JsonMapping) -> DlrmConfig:
        """Build a config from its JSON document form."""
        return cls(
            num_tables=as_int(ensure_required(payload, "num_tables"), "num_tables"),
            rows_per_table=as_int(ensure_required(payload, "rows_per_table"), "rows_per_table"),
            emb_dim=as_int(ensure_required(payload, "emb_dim"), "emb_dim"),
            bottom_mlp=as_int_list(ensure_required(payload, "bottom_mlp"), "bottom_mlp"),
            top_mlp=as_int_list(ensure_required(payload, "top_mlp"), "top_mlp"),
            minibatch=as_int(ensure_required(payload, "minibatch"), "minibatch"),
            bytes_per_element=as_int(
                ensure_required(payload, "bytes_per_element"), "bytes_per_element"
            ),
            lookups_per_sample=as_int(payload.get("lookups_per_sample", 1), "lookups_per_sample"),
        )

    def to_dict(self) -> dict[str, Any]:
        """Return the config in its JSON document form."""
        return {
            "num_tables": self.num_tables,
            "rows_per_table": self.rows_per_table,
            "emb_dim": self.emb_dim,
            "bottom_mlp": list(self.bottom_mlp),
            "top_mlp": list(self.top_mlp),
            "minibatch": self.minibatch,
            "bytes_per_element": self.bytes_per_element,
            "lookups_per_sample": self.lookups_per_sample,
        }


@dataclass(frozen=True, slots=True)
class DeviceEnvelope:
    """Per-device memory capacity and bandwidth."""

    memory_capacity: float
    memory_bandwidth: float
    role: DeviceRole

    def __post_init__(self) -> None:
        """Reject non-positive capacities and bandwidths."""
        if self.memory_capacity <= 0 or self.memory_bandwidth <= 0:
            raise ModelValidationError("DeviceEnvelope capacity and bandwidth must be positive")

    def to_dict(self) -> dict[str, Any]:
        """Return the envelope in its config document form."""
        return {
            "memory_capacity": self.memory_capacity,
            "memory_bandwidth": self.memory_bandwidth,
            "role": str(self.role),
        }


# Eight-device system: ~0.2 TB / ~8 TB/s aggregate on accelerators, ~2 TB / ~1 TB/s on CPUs.
DEVICES_PER_SYSTEM: Final[int] = 8
ACCELERATOR_ENVELOPE: Final[DeviceEnvelope] = DeviceEnvelope(
    0.2e12 / DEVICES_PER_SYSTEM, 8e12 / DEVICES_PER_SYSTEM, DeviceRole.ACCELERATOR
)
CPU_ENVELOPE: Final[DeviceEnvelope] = DeviceEnvelope(
    2e12 / DEVICES_PER_SYSTEM, 1e12 / DEVICES_PER_SYSTEM, DeviceRole.CPU
)
ENVELOPE_PRESETS: Final[dict[str, DeviceEnvelope]] = {
    str(DeviceRole.ACCELERATOR): ACCELERATOR_ENVELOPE,
    str(DeviceRole.CPU): CPU_ENVELOPE,
}


def envelope_from_mapping(payload: JsonMapping | str) -> DeviceEnvelope:
    """Return a preset envelope by role name or build one from a config object."""
    if isinstance(payload, str):
        try:
            return ENVELOPE_PRESETS[payload.strip().lower()]
        except KeyError:
            raise ModelValidationError(f"Unknown device envelope: {payload!r}") from None
    role = str(ensure_required(payload, "role")).strip().lower()
    if role not in ENVELOPE_PRESETS:
        raise ModelValidationError(f"Unknown device role: {role!r}")
    return DeviceEnvelope(
        memory_capacity=as_float(ensure_required(payload, "memory_capacity"), "memory_capacity"),
        memory_bandwidth=as_float(
            ensure_required(payload, "memory_bandwidth"), "memory_bandwidth"
        ),
        role=DeviceRole(role),
    )


@dataclass(frozen=True, slots=True)
class PlacementPlan:
    """Assignment of whole embedding tables to devices; MLPs are replicated everywhere."""

    p: int
    tables_on_device: Mapping[int, tuple[int, ...]] = field(default_factory=dict)
    mlp_replicated: bool = True

    def __post_init__(self) -> None:
        """Check that no table is placed twice and every device id is in range."""
        if self.p < 1:
            raise ModelValidationError("PlacementPlan.p must be at least 1")
        if not self.mlp_replicated:
            raise ModelValidationError("PlacementPlan always replicates the MLPs")
        if any(not 0 <= device < self.p for device in self.tables_on_device):
            raise ModelValidationError("PlacementPlan assigns tables to an unknown device")
        tables = [table for assigned in self.tables_on_device.values() for table in assigned]
        if len(tables) != len(set(tables)):
            raise ModelValidationError("PlacementPlan places a table on more than one device")

    @property
    def table_count(self) -> int:
        """Number of tables placed across all devices."""
        return sum(len(assigned) for assigned in self.tables_on_device.values())

    def tables_for(self, device: int) -> tuple[int, ...]:
        """Return the table ids held by ``device``."""
        return self.tables_on_device.get(device, ())

    def to_dict(self) -> dict[str, Any]:
        """Return ``{p, tables_on_device, mlp_replicated}`` with string device keys."""
        return {
            "p": self.p,
            "tables_on_device": {
                str(device): list(self.tables_for(device)) for device in range(self.p)
            },
            "mlp_replicated": self.mlp_replicated,
        }


@dataclass(frozen=True, slots=True)
class CommDemand:
    """Per-iteration collective message sizes of one training step."""

    allreduce_bytes: int
    alltoall_bytes_per_node: int
    alltoall_bytes_backward: int

    def __post_init__(self) -> None:
        """Validate non-negative sizes and symmetric alltoall volume."""
        if min(self.allreduce_bytes, self.alltoall_bytes_per_node) < 0:
            raise ModelValidationError("CommDemand sizes must be non-negative")
        if self.alltoall_bytes_per_node != self.alltoall_bytes_backward:
            raise ModelValidationError("Forward and backward alltoall volumes must match")

    def to_dict(self) -> dict[str, int]:
        """Return the demand in bytes."""
        return {
            "allreduce_bytes": self.allreduce_bytes,
            "alltoall_bytes_per_node": self.alltoall_bytes_per_node,
            "alltoall_bytes_backward": self.alltoall_bytes_backward,
        }


@dataclass(frozen=True, slots=True)
class SendRecvDemand:
    """Bytes one trainer pushes to and pulls from parameter servers per iteration."""

    send_bytes: int
    recv_bytes: int

    def to_dict(self) -> dict[str, int]:
        """Return the demand in bytes."""
        return {"send_bytes": self.send_bytes, "recv_bytes": self.recv_bytes}


def _layer_params(widths: tuple[int, ...]) -> int:
    return sum(
        fan_in * fan_out + fan_out for fan_in, fan_out in zip(widths, widths[1:], strict=False)
    )


def mlp_param_count(config: DlrmConfig) -> int:
    """Return weights plus biases over consecutive layer pairs of both MLPs."""
    return _layer_params(config.bottom_mlp) + _layer_params(config.top_mlp)


def allreduce_demand(config: DlrmConfig) -> int:
    """Return the per-iteration gradient allreduce size in bytes."""
    return mlp_param_count(config) * config.bytes_per_element


def plan_placement(config: DlrmConfig, p: int, envelope: DeviceEnvelope) -> PlacementPlan:
    """Assign tables round-robin by index and check each device's memory.

    Raises:
        CapacityExceededError: If a device's tables exceed ``envelope.memory_capacity``.
    """
    if p < 1:
        raise ModelValidationError(f"Placement needs at least one device, got {p}")
    assigned: dict[int, list[int]] = {device: [] for device in range(p)}
    for table in range(config.num_tables):
        assigned[table % p].append(table)
    for device, tables in assigned.items():
        required = len(tables) * config.table_bytes
        if required > envelope.memory_capacity:
            error = CapacityExceededError(device, required, envelope.memory_capacity)
            _LOGGER.warning("workload.placement.rejected", extra=error.context())
            raise error
    plan = PlacementPlan(
        p=p, tables_on_device={device: tuple(tables) for device, tables in assigned.items()}
    )
    _LOGGER.debug(
        "workload.placement.completed",
        extra={"p": p, "tables": config.num_tables, "role": str(envelope.role)},
    )
    return plan


def per_device_alltoall_bytes(config: DlrmConfig, plan: PlacementPlan) -> tuple[int, ...]:
    """Return each device's forward alltoall send volume in bytes.

    A device sends the lookup results of its tables for every sample except its own
    ``1/p`` share of the minibatch; fractional volumes round up to whole bytes.
    """
    if plan.p < 2:  # noqa: PLR2004
        return tuple(0 for _ in range(plan.p))
    per_table = (
        config.minibatch * config.emb_dim * config.bytes_per_element * config.lookups_per_sample
    )
    share = Fraction(plan.p - 1, plan.p)
    return tuple(
        math.ceil(len(plan.tables_for(device)) * per_table * share) for device in range(plan.p)
    )


def alltoall_demand(config: DlrmConfig, plan: PlacementPlan) -> int:
    """Return the alltoall ``M``: the largest per-device send volume."""
    return max(per_device_alltoall_bytes(config, plan), default=0)


def comm_demand(config: DlrmConfig, plan: PlacementPlan) -> CommDemand:
    """Return allreduce and forward/backward alltoall sizes for one iteration."""
    alltoall = alltoall_demand(config, plan)
    return CommDemand(
        allreduce_bytes=allreduce_demand(config),
        alltoall_bytes_per_node=alltoall,
        alltoall_bytes_backward=alltoall,
    )


def parameter_server_demand(config: DlrmConfig) -> SendRecvDemand:
    """Return the send/recv sizing of asynchronous training against parameter servers.

    Each trainer pushes its MLP gradients and pulls fresh MLP weights once per iteration.
    """
    size = allreduce_demand(config)
    return SendRecvDemand(send_bytes=size, recv_bytes=size)


def embedding_lookup_seconds(
    config: DlrmConfig, plan: PlacementPlan, envelope: DeviceEnvelope
) -> float:
    """Return the slowest device's time to read its lookup results from memory."""
    per_table = (
        config.minibatch * config.lookups_per_sample * config.emb_dim * config.bytes_per_element
    )
    busiest = max((len(plan.tables_for(device)) for device in range(plan.p)), default=0)
    return busiest * per_table / envelope.memory_bandwidth


def end_to_end_estimate(
    config: DlrmConfig,
    plan: PlacementPlan,
    family: TopologyFamily,
    bandwidth: float,
    alpha: float,
    *,
    transport: TransportProfile | None = None,
) -> float:
    """Return per-iteration communication seconds: one allreduce plus two alltoalls.

    The alltoall runs once for forward activations and once for their gradients. A single
    device communicates nothing.

    Raises:
        UnsupportedFamilyError: If ``family`` has no closed-form model.
    """
    if plan.p < 2:  # noqa: PLR2004
        return 0.0
    demand = comm_demand(config, plan)

    def _params(message_bytes: int) -> CollectiveParams:
        params = CollectiveParams(
            p=plan.p, message_bytes=float(message_bytes), bandwidth=bandwidth, alpha=alpha
        )
        return apply(transport, params) if transport is not None else params

    allreduce = collective_cost(CollectiveKind.ALLREDUCE, family, _params(demand.allreduce_bytes))
    alltoall = collective_cost(
        CollectiveKind.ALLTOALL, family, _params(demand.alltoall_bytes_per_node)
    )
    return allreduce.total + 2 * alltoall.total


__all__ = [
    "ACCELERATOR_ENVELOPE",
    "CPU_ENVELOPE",
    "ENVELOPE_PRESETS",
    "CapacityExceededError",
    "CommDemand",
    "DeviceEnvelope",
    "DeviceRole",
    "DlrmConfig",
    "PlacementPlan",
    "SendRecvDemand",
    "allreduce_demand",
    "alltoall_demand",
    "comm_demand",
    "embedding_lookup_seconds",
    "end_to_end_estimate",
    "envelope_from_mapping",
    "mlp_param_count",
    "parameter_server_demand",
    "per_device_alltoall_bytes",
    "plan_placement",
]
