from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence

SIGNIFICANT_DIGITS = 6


def format_number(value: float | int) -> str:
    """Return ``value`` rendered with six significant digits.

    Integers within six digits print without an exponent, larger magnitudes switch to
    ``1e+09`` style, which keeps CSV output identical across platforms.
    """
    return f"{float(value):.{SIGNIFICANT_DIGITS}g}"


def render_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    """Render ``header`` and ``rows`` as CSV with ``\\n`` line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


__all__ = ["SIGNIFICANT_DIGITS", "format_number", "render_csv"]
