"""Command-line interface for accel-fabric."""

from __future__ import annotations

import contextlib
import json
import logging
import math
import sys
from collections.abc import Callable, Iterator
from datetime import UTC, datetime
from pathlib import Path
from typing import Any, Final, TypeVar

import click

from . import __version__
from ._format import format_number, render_csv
from .analytic import (
    collective_cost,
    default_alphas,
    default_message_sizes,
    ratio_grid,
    select_family,
)
from .config import (
    LOG_FORMATS,
    LOG_LEVELS,
    REPORT_FORMATS,
    ConfigurationError,
    LoggingConfig,
    ReportConfig,
    Scenario,
    SpeedupAxes,
    load_logging_config,
    load_scenario,
)
from .models import (
    CollectiveKind,
    CollectiveParams,
    ModelValidationError,
    TopologyFamily,
    UnsupportedFamilyError,
    UnsupportedFeatureError,
    as_int,
)
from .report import Report, ReportWriteError, write_report
from .schedule import SimulationError, build_schedule, simulate, verify_allreduce, verify_alltoall
from .topology import (
    UNDIFFERENTIATED,
    FlatTopologyError,
    TopologySpec,
    describe,
    load_presets,
    local_global_fractions,
)
from .transport import SpeedupSweep, gdr_speedup, scaling_sweep, speedup_sweep
from .workload import (
    allreduce_demand,
    alltoall_demand,
    comm_demand,
    embedding_lookup_seconds,
    end_to_end_estimate,
    parameter_server_demand,
    per_device_alltoall_bytes,
    plan_placement,
)

_LOGGER = logging.getLogger(__name__)

RESERVED_LOG_RECORD_ATTRS: Final[set[str]] = {
    "name",
    "msg",
    "args",
    "levelname",
    "levelno",
    "pathname",
    "filename",
    "module",
    "exc_info",
    "exc_text",
    "stack_info",
    "lineno",
    "funcName",
    "created",
    "msecs",
    "relativeCreated",
    "thread",
    "threadName",
    "processName",
    "process",
    "taskName",
}

ANALYTIC_FAMILIES: Final[tuple[TopologyFamily, ...]] = (
    TopologyFamily.RING,
    TopologyFamily.FULLY_CONNECTED,
)
ANALYTIC_MATCH_TOLERANCE: Final[float] = 1e-9

F = TypeVar("F", bound=Callable[..., Any])


class ScenarioParseError(click.ClickException):
    """A scenario document could not be read or decoded."""

    exit_code = 2


class ScenarioValidationError(click.ClickException):
    """A scenario violates a model invariant."""

    exit_code = 3


class UnsupportedScenarioError(click.ClickException):
    """A scenario asks for something the toolkit does not model."""

    exit_code = 4


class JsonFormatter(logging.Formatter):
    """Serialize log records to JSON, preserving custom ``extra`` fields."""

    def format(self, record: logging.LogRecord) -> str:
        """Return a JSON-encoded representation of ``record``."""
        payload: dict[str, object] = {
            "timestamp": datetime.now(UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key in RESERVED_LOG_RECORD_ATTRS or key.startswith("_"):
                continue
            payload[key] = value
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str, ensure_ascii=False)


def configure_logging(config: LoggingConfig) -> logging.Logger:
    """Configure the ``accel_fabric`` logger hierarchy on stderr.

    Args:
        config: Logging configuration settings.

    Returns:
        logging.Logger: Root logger for the accel_fabric namespace.
    """
    resolved_level = getattr(logging, config.level.upper(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    resolved_format = config.format.lower()
    if resolved_format == "auto":
        is_tty = bool(getattr(handler.stream, "isatty", lambda: False)())
        resolved_format = "text" if is_tty else "json"

    if resolved_format == "json":
        formatter: logging.Formatter = JsonFormatter()
    else:
        formatter = logging.Formatter(
            "%(asctime)s %(levelname)s %(name)s: %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

    handler.setFormatter(formatter)
    logger = logging.getLogger("accel_fabric")
    logger.handlers.clear()
    logger.setLevel(resolved_level)
    logger.propagate = False
    logger.addHandler(handler)
    logging.captureWarnings(True)
    return logger


@contextlib.contextmanager
def _exit_codes() -> Iterator[None]:
    """Map library errors onto the CLI's exit code contract."""
    try:
        yield
    except ConfigurationError as exc:
        raise ScenarioParseError(str(exc)) from exc
    except UnsupportedFeatureError as exc:
        raise UnsupportedScenarioError(str(exc)) from exc
    except ModelValidationError as exc:
        raise ScenarioValidationError(str(exc)) from exc
    except (SimulationError, ReportWriteError) as exc:
        raise click.ClickException(str(exc)) from exc


def _report_options(func: F) -> F:
    """Attach ``--format`` and ``--out`` to a command."""
    func = click.option(
        "--out",
        type=click.Path(path_type=Path, dir_okay=False),
        default=None,
        help="Write the report to this file instead of standard output",
    )(func)
    func = click.option(
        "--format",
        "fmt",
        type=click.Choice(REPORT_FORMATS, case_sensitive=False),
        default=None,
        help="Report format (defaults to the scenario's format, then json)",
    )(func)
    return func


def _config_option(*, required: bool) -> Callable[[F], F]:
    return click.option(
        "--config",
        "config_path",
        type=click.Path(path_type=Path, dir_okay=False),
        required=required,
        help="Scenario document (JSON)",
    )


def _emit(report: Report, scenario: Scenario, fmt: str | None, out: Path | None) -> None:
    settings = ReportConfig(format=(fmt or scenario.format or "json").lower(), out=out)
    write_report(report.render(settings.format), settings.out)
    if settings.out is not None:
        click.echo(f"Report written to {settings.out}")


def _message_bytes(scenario: Scenario, kind: CollectiveKind, spec: TopologySpec) -> float:
    """Return the explicit ``M`` or derive it from the scenario's model config."""
    if scenario.message_bytes is not None:
        return scenario.message_bytes
    if scenario.dlrm is None:
        raise ModelValidationError("Scenario needs params.M or a dlrm config")
    if kind is CollectiveKind.ALLREDUCE:
        return float(allreduce_demand(scenario.dlrm))
    plan = plan_placement(scenario.dlrm, spec.p, scenario.envelope)
    return float(alltoall_demand(scenario.dlrm, plan))


def _speedup_sweep(scenario: Scenario, spec: TopologySpec, axes: SpeedupAxes) -> SpeedupSweep:
    """Sweep the GDR speedup of the scenario's transport along its single axis."""
    if scenario.collective is None or scenario.transport is None:
        raise ModelValidationError("A speedup sweep needs a 'collective' and a 'transport'")
    kind = scenario.collective
    if axes.message_sizes is not None:
        base = CollectiveParams(
            p=spec.p,
            message_bytes=0.0,
            bandwidth=spec.node_bandwidth,
            alpha=scenario.alpha,
        )
        return speedup_sweep(kind, base, axes.message_sizes, scenario.transport)
    base = CollectiveParams(
        p=spec.p,
        message_bytes=_message_bytes(scenario, kind, spec),
        bandwidth=spec.node_bandwidth,
        alpha=scenario.alpha,
    )
    return scaling_sweep(kind, base, axes.node_counts or (), scenario.transport)


def _bool_text(value: bool) -> str:
    return "true" if value else "false"


def build_analyze_report(scenario: Scenario, *, max_workers: int = 1) -> Report:
    """Evaluate the closed-form models: a ratio grid, a speedup sweep or per-family costs."""
    spec = scenario.require_topology()
    topology = spec.build()
    if scenario.sweep is not None:
        if scenario.collective is None:
            raise ModelValidationError("A sweep scenario needs a 'collective'")
        sweep = scenario.sweep
        grid = ratio_grid(
            scenario.collective,
            spec.p,
            spec.node_bandwidth,
            default_message_sizes() if sweep.message_sizes is None else sweep.message_sizes,
            default_alphas() if sweep.alphas is None else sweep.alphas,
            max_workers=max_workers,
        )
        results = {"topology": describe(topology), "grid": grid.to_dict()}
        return Report(scenario=scenario.to_dict(), results=results, csv=grid.to_csv())
    if scenario.speedup_sweep is not None:
        sweep_result = _speedup_sweep(scenario, spec, scenario.speedup_sweep)
        results = {"topology": describe(topology), "speedup_sweep": sweep_result.to_dict()}
        return Report(scenario=scenario.to_dict(), results=results, csv=sweep_result.to_csv())

    kinds = tuple(CollectiveKind) if scenario.collective is None else (scenario.collective,)
    collectives: dict[str, Any] = {}
    rows: list[list[str]] = []
    for kind in kinds:
        params = CollectiveParams(
            p=spec.p,
            message_bytes=_message_bytes(scenario, kind, spec),
            bandwidth=spec.node_bandwidth,
            alpha=scenario.alpha,
        )
        costs = {family: collective_cost(kind, family, params) for family in ANALYTIC_FAMILIES}
        selected, _ = select_family(kind, params)
        fc_total = costs[TopologyFamily.FULLY_CONNECTED].total
        entry: dict[str, Any] = {
            "params": params.to_dict(),
            "costs": {str(family): cost.to_dict() for family, cost in costs.items()},
            # Zero-cost collectives (M = 0, alpha = 0) have no meaningful ratio.
            "ring_over_fc": costs[TopologyFamily.RING].total / fc_total if fc_total else None,
            "selected_family": str(selected),
        }
        if scenario.transport is not None and fc_total:
            entry["gdr_speedup"] = gdr_speedup(kind, params, scenario.transport)
        collectives[str(kind)] = entry
        rows.extend(
            [
                str(kind),
                str(family),
                format_number(cost.bandwidth_term),
                format_number(cost.latency_term),
                format_number(cost.total),
            ]
            for family, cost in costs.items()
        )
    csv_text = render_csv(
        ["collective", "family", "bandwidth_term_s", "latency_term_s", "total_s"], rows
    )
    results = {"topology": describe(topology), "collectives": collectives}
    return Report(scenario=scenario.to_dict(), results=results, csv=csv_text)


def build_simulate_report(scenario: Scenario) -> tuple[Report, str]:
    """Build, simulate and verify the scenario's schedule; also return its trace CSV."""
    spec = scenario.require_topology()
    if spec.family not in ANALYTIC_FAMILIES:
        raise UnsupportedFamilyError(f"Simulation is not supported for {spec.family}")
    if scenario.collective is None:
        raise ModelValidationError("A simulate scenario needs a 'collective'")
    kind = scenario.collective
    message_bytes = as_int(_message_bytes(scenario, kind, spec), "M")
    topology = spec.build()
    schedule = build_schedule(kind, spec.family, spec.p, message_bytes)
    result = simulate(schedule, topology, scenario.alpha)
    analytic = collective_cost(
        kind,
        spec.family,
        CollectiveParams(
            p=spec.p,
            message_bytes=float(message_bytes),
            bandwidth=spec.node_bandwidth,
            alpha=scenario.alpha,
        ),
    ).total
    analytic_match = math.isclose(result.makespan, analytic, rel_tol=ANALYTIC_MATCH_TOLERANCE)
    verify = verify_allreduce if kind is CollectiveKind.ALLREDUCE else verify_alltoall
    semantics_ok = verify(schedule)
    _LOGGER.info(
        "cli.simulate.completed",
        extra={"analytic_match": analytic_match, "semantics_ok": semantics_ok},
    )
    results = {
        "topology": describe(topology),
        "steps": len(schedule.steps),
        "chunk_bytes": schedule.chunk_bytes,
        "simulation": result.to_dict(),
        "analytic_s": analytic,
        "analytic_match": analytic_match,
        "semantics_ok": semantics_ok,
    }
    csv_text = render_csv(
        [
            "collective",
            "family",
            "p",
            "steps",
            "makespan_s",
            "analytic_s",
            "analytic_match",
            "semantics_ok",
        ],
        [
            [
                str(kind),
                str(spec.family),
                spec.p,
                len(schedule.steps),
                format_number(result.makespan),
                format_number(analytic),
                _bool_text(analytic_match),
                _bool_text(semantics_ok),
            ]
        ],
    )
    report = Report(scenario=scenario.to_dict(), results=results, csv=csv_text)
    return report, schedule.to_trace_csv()


def build_workload_report(scenario: Scenario) -> Report:
    """Derive demands, placement and end-to-end communication estimates from a model config."""
    spec = scenario.require_topology()
    if scenario.dlrm is None:
        raise ModelValidationError("A workload scenario needs a 'dlrm' object")
    dlrm = scenario.dlrm
    plan = plan_placement(dlrm, spec.p, scenario.envelope)
    demand = comm_demand(dlrm, plan)
    estimates = {
        family: end_to_end_estimate(
            dlrm,
            plan,
            family,
            spec.node_bandwidth,
            scenario.alpha,
            transport=scenario.transport,
        )
        for family in ANALYTIC_FAMILIES
    }
    fc_seconds = estimates[TopologyFamily.FULLY_CONNECTED]
    results = {
        "comm_demand": demand.to_dict(),
        "placement": plan.to_dict(),
        "per_device_alltoall_bytes": list(per_device_alltoall_bytes(dlrm, plan)),
        "end_to_end_s": {str(family): seconds for family, seconds in estimates.items()},
        "end_to_end_ring_over_fc": (
            estimates[TopologyFamily.RING] / fc_seconds if fc_seconds > 0 else None
        ),
        "embedding_lookup_s": embedding_lookup_seconds(dlrm, plan, scenario.envelope),
        "parameter_server": parameter_server_demand(dlrm).to_dict(),
    }
    csv_text = render_csv(
        ["family", "allreduce_bytes", "alltoall_bytes", "end_to_end_s"],
        (
            [
                str(family),
                demand.allreduce_bytes,
                demand.alltoall_bytes_per_node,
                format_number(seconds),
            ]
            for family, seconds in estimates.items()
        ),
    )
    return Report(scenario=scenario.to_dict(), results=results, csv=csv_text)


def build_presets_report(scenario: Scenario) -> Report:
    """Tabulate local/global bandwidth fractions of the system presets."""
    entries: list[dict[str, Any]] = []
    rows: list[list[str]] = []
    for preset in load_presets([preset.to_dict() for preset in scenario.presets]).values():
        entry = preset.to_dict()
        try:
            local, global_ = local_global_fractions(preset)
        except FlatTopologyError:
            entry.update(local_fraction=UNDIFFERENTIATED, global_fraction=UNDIFFERENTIATED)
            rows.append([preset.name, UNDIFFERENTIATED, UNDIFFERENTIATED])
        else:
            entry.update(local_fraction=local, global_fraction=global_)
            rows.append([preset.name, format_number(local), format_number(global_)])
        entries.append(entry)
    csv_text = render_csv(["name", "local_fraction", "global_fraction"], rows)
    return Report(scenario=scenario.to_dict(), results={"presets": entries}, csv=csv_text)


@click.group()
@click.version_option(__version__, prog_name="accel-fabric")
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default=None,
    help="Logging verbosity [default: warning, or ACCEL_FABRIC_LOG_LEVEL]",
)
@click.option(
    "--log-format",
    type=click.Choice(LOG_FORMATS, case_sensitive=False),
    default=None,
    help="Logging output format [default: auto, or ACCEL_FABRIC_LOG_FORMAT]",
)
def cli(log_level: str | None, log_format: str | None) -> None:
    """Model collective communication on accelerator fabrics."""
    with _exit_codes():
        config = load_logging_config(level=log_level, log_format=log_format)
    configure_logging(config)


@cli.command()
@_config_option(required=True)
@_report_options
@click.option(
    "--max-workers",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Threads used to evaluate ratio grid rows",
)
def analyze(config_path: Path, fmt: str | None, out: Path | None, max_workers: int) -> None:
    """Evaluate the ring and fully connected cost models for a scenario."""
    with _exit_codes():
        scenario = load_scenario(config_path)
        report = build_analyze_report(scenario, max_workers=max_workers)
        _emit(report, scenario, fmt, out)


@cli.command("simulate")
@_config_option(required=True)
@_report_options
@click.option(
    "--trace",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="Also write the per-transfer schedule trace (CSV) to this file",
)
def simulate_command(
    config_path: Path, fmt: str | None, out: Path | None, trace: Path | None
) -> None:
    """Build, simulate and verify the schedule described by a scenario."""
    with _exit_codes():
        scenario = load_scenario(config_path)
        report, trace_csv = build_simulate_report(scenario)
        if trace is not None:
            write_report(trace_csv, trace)
        _emit(report, scenario, fmt, out)


@cli.command()
@_config_option(required=True)
@_report_options
def workload(config_path: Path, fmt: str | None, out: Path | None) -> None:
    """Derive communication demand and placement from a recommendation model config."""
    with _exit_codes():
        scenario = load_scenario(config_path)
        report = build_workload_report(scenario)
        _emit(report, scenario, fmt, out)


@cli.command()
@_config_option(required=False)
@_report_options
def presets(config_path: Path | None, fmt: str | None, out: Path | None) -> None:
    """List system presets with their local/global bandwidth split."""
    with _exit_codes():
        scenario = Scenario() if config_path is None else load_scenario(config_path)
        report = build_presets_report(scenario)
        _emit(report, scenario, fmt, out)


if __name__ == "__main__":
    cli()
