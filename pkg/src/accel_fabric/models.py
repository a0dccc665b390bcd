"""Shared value types, vocabularies and validation helpers for fabric models."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

JsonMapping = Mapping[str, Any]


class ModelValidationError(ValueError):
    """Raised when a value violates a model invariant."""


class UnsupportedFeatureError(RuntimeError):
    """Raised when a well-formed request asks for something the toolkit does not model."""


class UnsupportedFamilyError(UnsupportedFeatureError):
    """Raised when a topology family has no closed form or schedule builder."""


class CollectiveKind(StrEnum):
    """Collective communication primitives covered by the models."""

    ALLREDUCE = "allreduce"
    ALLTOALL = "alltoall"

    @classmethod
    def parse(cls, value: Any) -> CollectiveKind:
        """Return the kind named by ``value``, ignoring case."""
        text = str(value).strip().lower()
        for member in cls:
            if member.value == text:
                return member
        raise ModelValidationError(f"Unknown collective kind: {value!r}")


_FAMILY_ALIASES: dict[str, str] = {
    "ring": "ring",
    "fc": "fully_connected",
    "fullyconnected": "fully_connected",
    "fully_connected": "fully_connected",
    "hybridcubemesh": "hybrid_cube_mesh",
    "hybrid_cube_mesh": "hybrid_cube_mesh",
    "torus2d": "torus_2d",
    "torus_2d": "torus_2d",
}


class TopologyFamily(StrEnum):
    """Named accelerator fabric topology families."""

    RING = "ring"
    FULLY_CONNECTED = "fully_connected"
    HYBRID_CUBE_MESH = "hybrid_cube_mesh"
    TORUS_2D = "torus_2d"

    @classmethod
    def parse(cls, value: Any) -> TopologyFamily:
        """Return the family named by ``value``.

        Accepts the canonical snake_case names as well as ``FullyConnected``/``fc`` style
        spellings, case-insensitively.
        """
        key = str(value).strip().lower().replace("-", "_")
        canonical = _FAMILY_ALIASES.get(key) or _FAMILY_ALIASES.get(key.replace("_", ""))
        if canonical is None:
            raise ModelValidationError(f"Unknown topology family: {value!r}")
        return cls(canonical)


def ensure_required(payload: JsonMapping, key: str) -> Any:
    """Retrieve ``key`` from ``payload`` and raise if missing or empty."""
    if key not in payload or payload[key] in (None, ""):
        raise ModelValidationError(f"Missing required field '{key}'")
    return payload[key]


def as_int(value: Any, name: str) -> int:
    """Coerce ``value`` to ``int``, rejecting booleans and non-integral numbers."""
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ModelValidationError(f"{name} must be an integer, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        raise ModelValidationError(f"{name} must be an integer, got {value!r}")
    return int(value)


def as_float(value: Any, name: str) -> float:
    """Coerce ``value`` to ``float``, rejecting booleans and non-numbers."""
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ModelValidationError(f"{name} must be a number, got {value!r}")
    return float(value)


def as_int_list(value: Any, name: str) -> tuple[int, ...]:
    """Coerce a JSON array of integers into a tuple."""
    if not isinstance(value, Sequence) or isinstance(value, str):
        raise ModelValidationError(f"{name} must be a list of integers")
    return tuple(as_int(item, name) for item in value)


def as_float_list(value: Any, name: str) -> tuple[float, ...]:
    """Coerce a JSON array of numbers into a tuple of floats."""
    if not isinstance(value, Sequence) or isinstance(value, str):
        raise ModelValidationError(f"{name} must be a list of numbers")
    return tuple(as_float(item, name) for item in value)


@dataclass(frozen=True, slots=True)
class CollectiveParams:
    """Inputs of the closed-form collective cost models.

    Attributes:
        p: Number of nodes taking part in the collective.
        message_bytes: Per-node payload ``M`` in bytes.
        bandwidth: Per-node bandwidth budget ``B`` in bytes/second.
        alpha: Per-node (per-hop) latency in seconds.
    """

    p: int
    message_bytes: float
    bandwidth: float
    alpha: float = 0.0

    def __post_init__(self) -> None:
        """Validate the parameter envelope."""
        if self.p < 2:  # noqa: PLR2004
            raise ModelValidationError("CollectiveParams.p must be at least 2")
        if self.message_bytes < 0:
            raise ModelValidationError("CollectiveParams.message_bytes must be non-negative")
        if self.bandwidth <= 0:
            raise ModelValidationError("CollectiveParams.bandwidth must be positive")
        if self.alpha < 0:
            raise ModelValidationError("CollectiveParams.alpha must be non-negative")

    def to_dict(self) -> dict[str, float | int]:
        """Return the parameters keyed by their model symbols."""
        return {"p": self.p, "M": self.message_bytes, "B": self.bandwidth, "alpha": self.alpha}


@dataclass(frozen=True, slots=True)
class CostBreakdown:
    """Execution time of a collective split into bandwidth and latency components."""

    bandwidth_term: float
    latency_term: float

    def __post_init__(self) -> None:
        """Reject negative components."""
        if self.bandwidth_term < 0 or self.latency_term < 0:
            raise ModelValidationError("CostBreakdown terms must be non-negative")

    @property
    def total(self) -> float:
        """Total execution time in seconds."""
        return self.bandwidth_term + self.latency_term

    def to_dict(self) -> dict[str, float]:
        """Return a JSON-compatible representation in seconds."""
        return {
            "bandwidth_term_s": self.bandwidth_term,
            "latency_term_s": self.latency_term,
            "total_s": self.total,
        }


__all__ = [
    "CollectiveKind",
    "CollectiveParams",
    "CostBreakdown",
    "JsonMapping",
    "ModelValidationError",
    "TopologyFamily",
    "UnsupportedFamilyError",
    "UnsupportedFeatureError",
    "as_float",
    "as_float_list",
    "as_int",
    "as_int_list",
    "ensure_required",
]
