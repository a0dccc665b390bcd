"""Scenario documents and environment-driven settings for the accel-fabric CLI."""

from __future__ import annotations

import json
import logging
import os
from collections.abc import Mapping, MutableMapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Final, cast

from dotenv import find_dotenv, load_dotenv

from .models import (
    CollectiveKind,
    JsonMapping,
    ModelValidationError,
    as_float,
    as_float_list,
    as_int_list,
)
from .topology import SystemPreset, TopologySpec
from .transport import TransportProfile, profile_from_mapping
from .workload import ACCELERATOR_ENVELOPE, DeviceEnvelope, DlrmConfig, envelope_from_mapping

_LOGGER = logging.getLogger(__name__)

ENV_LOG_LEVEL: Final[str] = "ACCEL_FABRIC_LOG_LEVEL"
ENV_LOG_FORMAT: Final[str] = "ACCEL_FABRIC_LOG_FORMAT"

LOG_LEVELS: Final[tuple[str, ...]] = ("debug", "info", "warning", "error", "critical")
LOG_FORMATS: Final[tuple[str, ...]] = ("auto", "json", "text")
REPORT_FORMATS: Final[tuple[str, ...]] = ("csv", "json")


class ConfigurationError(RuntimeError):
    """Raised when a scenario document or environment setting cannot be read."""


@dataclass(frozen=True, slots=True)
class LoggingConfig:
    """Structured logging configuration."""

    level: str = "warning"
    format: str = "auto"

    def __post_init__(self) -> None:
        """Reject unknown levels and formats."""
        if self.level.lower() not in LOG_LEVELS:
            raise ConfigurationError(f"Unknown log level: {self.level!r}")
        if self.format.lower() not in LOG_FORMATS:
            raise ConfigurationError(f"Unknown log format: {self.format!r}")


@dataclass(frozen=True, slots=True)
class ReportConfig:
    """Where and how a command writes its report."""

    format: str = "json"
    out: Path | None = None

    def __post_init__(self) -> None:
        """Reject unknown report formats."""
        if self.format not in REPORT_FORMATS:
            raise ConfigurationError(f"Unknown report format: {self.format!r}")


def load_logging_config(
    *,
    level: str | None = None,
    log_format: str | None = None,
    dotenv_path: str | os.PathLike[str] | None = None,
    environ: Mapping[str, str | None] | None = None,
) -> LoggingConfig:
    """Resolve logging settings from explicit values, the environment, or a dotenv file.

    Explicit ``level``/``log_format`` win over ``ACCEL_FABRIC_LOG_LEVEL`` and
    ``ACCEL_FABRIC_LOG_FORMAT``. ``dotenv_path`` and ``environ`` allow tests to override
    discovery.
    """
    env: MutableMapping[str, str | None]
    if environ is not None:
        env = dict(environ)
    else:
        env = cast(MutableMapping[str, str | None], os.environ)
        if dotenv_path:
            resolved_path = find_dotenv(str(dotenv_path), raise_error_if_not_found=False)
        else:
            resolved_path = find_dotenv(raise_error_if_not_found=False, usecwd=True)
        if resolved_path:
            _LOGGER.debug("config.load_dotenv", extra={"path": resolved_path})
            load_dotenv(resolved_path, override=False)

    defaults = LoggingConfig()
    return LoggingConfig(
        level=(level or env.get(ENV_LOG_LEVEL) or defaults.level).lower(),
        format=(log_format or env.get(ENV_LOG_FORMAT) or defaults.format).lower(),
    )


def load_scenario_document(path: Path) -> dict[str, Any]:
    """Read ``path`` and decode it into a JSON object.

    Raises:
        ConfigurationError: If the file is unreadable, is not JSON, or is not an object.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"Cannot read scenario {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Scenario {path} is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigurationError(f"Scenario {path} must contain a JSON object")
    return document


@dataclass(frozen=True, slots=True)
class SweepAxes:
    """Latency and message-size axes of a ratio grid; ``None`` selects the default axis."""

    message_sizes: tuple[float, ...] | None = None
    alphas: tuple[float, ...] | None = None

    @classmethod
    def from_mapping(cls, payload: JsonMapping) -> SweepAxes:
        """Parse ``{message_sizes, alphas}``; omitted axes fall back to the defaults."""
        sizes = payload.get("message_sizes")
        alphas = payload.get("alphas")
        return cls(
            message_sizes=None if sizes is None else as_float_list(sizes, "message_sizes"),
            alphas=None if alphas is None else as_float_list(alphas, "alphas"),
        )

    def to_dict(self) -> dict[str, Any]:
        """Return the axes that were given explicitly."""
        payload: dict[str, Any] = {}
        if self.message_sizes is not None:
            payload["message_sizes"] = list(self.message_sizes)
        if self.alphas is not None:
            payload["alphas"] = list(self.alphas)
        return payload


@dataclass(frozen=True, slots=True)
class SpeedupAxes:
    """Axis of a transport speedup sweep: message sizes or node counts, never both."""

    message_sizes: tuple[float, ...] | None = None
    node_counts: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        """Require exactly one non-empty axis."""
        if (self.message_sizes is None) == (self.node_counts is None):
            raise ModelValidationError(
                "speedup_sweep needs exactly one of 'message_sizes' or 'node_counts'"
            )

    @classmethod
    def from_mapping(cls, payload: JsonMapping) -> SpeedupAxes:
        """Parse ``{message_sizes}`` or ``{node_counts}``."""
        sizes = payload.get("message_sizes")
        counts = payload.get("node_counts")
        return cls(
            message_sizes=None if sizes is None else as_float_list(sizes, "message_sizes"),
            node_counts=None if counts is None else as_int_list(counts, "node_counts"),
        )

    def to_dict(self) -> dict[str, Any]:
        """Return the single axis in its config document form."""
        if self.message_sizes is not None:
            return {"message_sizes": list(self.message_sizes)}
        return {"node_counts": list(self.node_counts or ())}


def _mapping(payload: JsonMapping, key: str) -> JsonMapping | None:
    value = payload.get(key)
    if value is None:
        return None
    if not isinstance(value, Mapping):
        raise ModelValidationError(f"'{key}' must be an object")
    return value


@dataclass(frozen=True, slots=True)
class Scenario:
    """One analysis request: a topology plus whatever each command needs.

    Attributes:
        topology: Family, node count and per-node bandwidth.
        collective: Collective to analyse; ``None`` means both.
        message_bytes: Explicit ``M``; mutually exclusive with ``dlrm``.
        alpha: Per-node latency in seconds.
        sweep: Grid axes; present when the scenario asks for a ratio grid.
        dlrm: Model configuration the message sizes are derived from.
        envelope: Device memory envelope used for table placement.
        transport: Optional transport path applied on top of the fabric.
        speedup_sweep: Axis along which the transport speedup is swept.
        presets: System preset overrides merged over the built-ins.
        format: Preferred report format, overridden by ``--format``.
    """

    topology: TopologySpec | None = None
    collective: CollectiveKind | None = None
    message_bytes: float | None = None
    alpha: float = 0.0
    sweep: SweepAxes | None = None
    dlrm: DlrmConfig | None = None
    envelope: DeviceEnvelope = ACCELERATOR_ENVELOPE
    transport: TransportProfile | None = None
    speedup_sweep: SpeedupAxes | None = None
    presets: tuple[SystemPreset, ...] = field(default_factory=tuple)
    format: str | None = None

    def __post_init__(self) -> None:
        """Enforce a single source for ``M``, a single sweep kind and a non-negative latency."""
        if self.message_bytes is not None and self.dlrm is not None:
            raise ModelValidationError("Give either params.M or a dlrm config, not both")
        if self.sweep is not None and self.speedup_sweep is not None:
            raise ModelValidationError("Give either 'sweep' or 'speedup_sweep', not both")
        if self.speedup_sweep is not None and self.transport is None:
            raise ModelValidationError("'speedup_sweep' needs a 'transport' profile")
        if self.message_bytes is not None and self.message_bytes < 0:
            raise ModelValidationError("params.M must be non-negative")
        if self.alpha < 0:
            raise ModelValidationError("params.alpha must be non-negative")
        if self.format is not None and self.format not in REPORT_FORMATS:
            raise ModelValidationError(f"Unknown report format: {self.format!r}")

    def require_topology(self) -> TopologySpec:
        """Return the topology or raise when the scenario has none."""
        if self.topology is None:
            raise ModelValidationError("Scenario needs a 'topology' object")
        return self.topology

    @classmethod
    def from_mapping(cls, payload: JsonMapping) -> Scenario:
        """Build a scenario from a decoded JSON document."""
        topology = _mapping(payload, "topology")
        params = _mapping(payload, "params") or {}
        sweep = _mapping(payload, "sweep")
        dlrm = _mapping(payload, "dlrm")
        envelope = payload.get("envelope")
        transport = payload.get("transport")
        speedup = _mapping(payload, "speedup_sweep")
        presets = payload.get("presets") or []
        if not isinstance(presets, list):
            raise ModelValidationError("'presets' must be a list of objects")
        collective = payload.get("collective")
        message = params.get("M", params.get("message_bytes"))
        scenario_format = payload.get("format")
        return cls(
            topology=None if topology is None else TopologySpec.from_mapping(topology),
            collective=None if collective is None else CollectiveKind.parse(collective),
            message_bytes=None if message is None else as_float(message, "M"),
            alpha=as_float(params.get("alpha", 0.0), "alpha"),
            sweep=None if sweep is None else SweepAxes.from_mapping(sweep),
            dlrm=None if dlrm is None else DlrmConfig.from_mapping(dlrm),
            envelope=ACCELERATOR_ENVELOPE if envelope is None else envelope_from_mapping(envelope),
            transport=None if transport is None else profile_from_mapping(transport),
            speedup_sweep=None if speedup is None else SpeedupAxes.from_mapping(speedup),
            presets=tuple(SystemPreset.from_mapping(item) for item in presets),
            format=None if scenario_format is None else str(scenario_format).lower(),
        )

    def to_dict(self) -> dict[str, Any]:
        """Return the normalized scenario echo embedded in every report."""
        payload: dict[str, Any] = {
            "params": {"alpha": self.alpha},
            "envelope": self.envelope.to_dict(),
        }
        if self.message_bytes is not None:
            payload["params"]["M"] = self.message_bytes
        if self.topology is not None:
            payload["topology"] = self.topology.to_dict()
        if self.collective is not None:
            payload["collective"] = str(self.collective)
        if self.sweep is not None:
            payload["sweep"] = self.sweep.to_dict()
        if self.dlrm is not None:
            payload["dlrm"] = self.dlrm.to_dict()
        if self.transport is not None:
            payload["transport"] = self.transport.to_dict()
        if self.speedup_sweep is not None:
            payload["speedup_sweep"] = self.speedup_sweep.to_dict()
        if self.presets:
            payload["presets"] = [preset.to_dict() for preset in self.presets]
        if self.format is not None:
            payload["format"] = self.format
        return payload


def load_scenario(path: Path) -> Scenario:
    """Read and validate the scenario stored at ``path``."""
    document = load_scenario_document(path)
    scenario = Scenario.from_mapping(document)
    _LOGGER.info("config.scenario_loaded", extra={"path": str(path)})
    return scenario


__all__ = [
    "ENV_LOG_FORMAT",
    "ENV_LOG_LEVEL",
    "LOG_FORMATS",
    "LOG_LEVELS",
    "REPORT_FORMATS",
    "ConfigurationError",
    "LoggingConfig",
    "ReportConfig",
    "Scenario",
    "SpeedupAxes",
    "SweepAxes",
    "load_logging_config",
    "load_scenario",
    "load_scenario_document",
]
