"""Report assembly and atomic persistence for CLI commands."""

from __future__ import annotations

import contextlib
import json
import logging
import os
import sys
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any

from . import __version__

_LOGGER = logging.getLogger(__name__)

_PART_SUFFIX = ".part"


class ReportWriteError(RuntimeError):
    """Raised when a report cannot be persisted."""


@dataclass(frozen=True, slots=True)
class Report:
    """Self-describing command output.

    Attributes:
        scenario: Normalized echo of the scenario the results were computed from.
        results: Command-specific results, JSON-compatible.
        csv: Plot-ready CSV rendering of the results.
        version: Version of the toolkit that produced the report.
    """

    scenario: Mapping[str, Any]
    results: Mapping[str, Any]
    csv: str
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        """Return ``{scenario, results, version}``."""
        return {"scenario": self.scenario, "results": self.results, "version": self.version}

    def to_json(self) -> str:
        """Serialize with sorted keys so identical inputs give identical bytes."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def render(self, fmt: str) -> str:
        """Return the report as ``csv`` or ``json`` text."""
        return self.csv if fmt == "csv" else self.to_json()


def write_report(text: str, out: Path | None, *, stream: IO[str] | None = None) -> None:
    """Write ``text`` to ``out`` atomically, or to ``stream`` (stdout) when ``out`` is ``None``.

    The file is staged next to ``out`` with a ``.part`` suffix, flushed to disk, and renamed
    into place; a failed write leaves no partial file behind.

    Raises:
        ReportWriteError: If the destination cannot be written.
    """
    if out is None:
        target = stream or sys.stdout
        target.write(text)
        target.flush()
        return

    temp_path = out.with_suffix(out.suffix + _PART_SUFFIX)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        with temp_path.open("w", encoding="utf-8", newline="") as temp_file:
            temp_file.write(text)
            temp_file.flush()
            os.fsync(temp_file.fileno())
        temp_path.replace(out)
    except OSError as exc:
        with contextlib.suppress(OSError):
            temp_path.unlink()
        raise ReportWriteError(f"Failed to write report to {out}: {exc}") from exc
    _LOGGER.info("report.written", extra={"path": str(out), "bytes": len(text.encode())})


__all__ = ["Report", "ReportWriteError", "write_report"]
