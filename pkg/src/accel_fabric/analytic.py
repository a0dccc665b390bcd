"""Closed-form allreduce/alltoall execution-time models for ring and fully connected fabrics."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import Future, ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Final

import numpy as np
import numpy.typing as npt
from scipy.optimize import brentq

from ._format import format_number, render_csv
from .models import (
    CollectiveKind,
    CollectiveParams,
    CostBreakdown,
    ModelValidationError,
    TopologyFamily,
    UnsupportedFamilyError,
)
from .topology import gamma

_LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
Seconds = float | FloatArray
TermFunction = Callable[[int, Seconds, float, float], tuple[Seconds, Seconds]]
Axis = Sequence[float] | FloatArray

GRID_POINTS: Final[int] = 10
_BRACKET_LIMIT: Final[int] = 2000


class EmptyAxisError(ModelValidationError):
    """Raised when a ratio grid axis has no values."""


def _allreduce_ring_terms(
    p: int, message: Seconds, bandwidth: float, alpha: float
) -> tuple[Seconds, Seconds]:
    return 2 * (message / bandwidth) * (p - 1) / p, 2 * alpha * (p - 1)


def _allreduce_fc_terms(
    p: int, message: Seconds, bandwidth: float, alpha: float
) -> tuple[Seconds, Seconds]:
    return 2 * (message * (p - 1)) / (bandwidth * p), 2 * alpha


def _alltoall_ring_terms(
    p: int, message: Seconds, bandwidth: float, alpha: float
) -> tuple[Seconds, Seconds]:
    steps = gamma(p)
    return steps * message / (bandwidth * p), steps * alpha


def _alltoall_fc_terms(
    p: int, message: Seconds, bandwidth: float, alpha: float
) -> tuple[Seconds, Seconds]:
    return message * (p - 1) / (bandwidth * p), alpha


_TERMS: Final[dict[tuple[CollectiveKind, TopologyFamily], TermFunction]] = {
    (CollectiveKind.ALLREDUCE, TopologyFamily.RING): _allreduce_ring_terms,
    (CollectiveKind.ALLREDUCE, TopologyFamily.FULLY_CONNECTED): _allreduce_fc_terms,
    (CollectiveKind.ALLTOALL, TopologyFamily.RING): _alltoall_ring_terms,
    (CollectiveKind.ALLTOALL, TopologyFamily.FULLY_CONNECTED): _alltoall_fc_terms,
}


def _breakdown(terms: TermFunction, params: CollectiveParams) -> CostBreakdown:
    bandwidth_term, latency_term = terms(
        params.p, params.message_bytes, params.bandwidth, params.alpha
    )
    return CostBreakdown(bandwidth_term=float(bandwidth_term), latency_term=float(latency_term))


def allreduce_ring(params: CollectiveParams) -> CostBreakdown:
    """Ring allreduce: ``2 (M/B)(p-1)/p`` bandwidth plus ``2 alpha (p-1)`` latency."""
    return _breakdown(_allreduce_ring_terms, params)


def allreduce_fc(params: CollectiveParams) -> CostBreakdown:
    """Fully connected allreduce over ``b = B/(p-1)`` channels: ``2 (M/b)(1/p) + 2 alpha``."""
    return _breakdown(_allreduce_fc_terms, params)


def alltoall_ring(params: CollectiveParams) -> CostBreakdown:
    """Ring alltoall: ``gamma(p) (M/(B p) + alpha)``."""
    return _breakdown(_alltoall_ring_terms, params)


def alltoall_fc(params: CollectiveParams) -> CostBreakdown:
    """Fully connected alltoall: ``(M/B)(p-1)/p + alpha``, a single direct phase."""
    return _breakdown(_alltoall_fc_terms, params)


def collective_cost(
    kind: CollectiveKind, family: TopologyFamily, params: CollectiveParams
) -> CostBreakdown:
    """Evaluate the closed form for ``kind`` on ``family``.

    Raises:
        UnsupportedFamilyError: If ``family`` has no closed-form model.
    """
    terms = _TERMS.get((kind, family))
    if terms is None:
        raise UnsupportedFamilyError(f"No closed-form {kind} model for {family}")
    return _breakdown(terms, params)


def select_family(
    kind: CollectiveKind, params: CollectiveParams
) -> tuple[TopologyFamily, CostBreakdown]:
    """Return the cheaper of ring and fully connected for ``kind``; ties favour the ring."""
    ring = collective_cost(kind, TopologyFamily.RING, params)
    fully_connected = collective_cost(kind, TopologyFamily.FULLY_CONNECTED, params)
    if fully_connected.total < ring.total:
        return TopologyFamily.FULLY_CONNECTED, fully_connected
    return TopologyFamily.RING, ring


def _ratio(
    kind: CollectiveKind, p: int, message: Seconds, bandwidth: float, alpha: float
) -> Seconds:
    ring_bw, ring_lat = _TERMS[kind, TopologyFamily.RING](p, message, bandwidth, alpha)
    fc_bw, fc_lat = _TERMS[kind, TopologyFamily.FULLY_CONNECTED](p, message, bandwidth, alpha)
    return (ring_bw + ring_lat) / (fc_bw + fc_lat)


@dataclass(frozen=True, slots=True)
class RatioGrid:
    """Ring-over-FC execution time ratios on a (latency x message size) grid.

    ``ratios[i][j]`` is ``T_ring / T_FC`` at ``alphas[i]`` and ``message_sizes[j]``; values
    above 1 mark where the fully connected fabric wins.
    """

    kind: CollectiveKind
    p: int
    bandwidth: float
    message_sizes: tuple[float, ...]
    alphas: tuple[float, ...]
    ratios: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        """Check the matrix shape against its axes."""
        if len(self.ratios) != len(self.alphas) or any(
            len(row) != len(self.message_sizes) for row in self.ratios
        ):
            raise ModelValidationError("RatioGrid dimensions do not match its axes")

    def to_csv(self) -> str:
        """Render the grid with an ``alpha_s`` column and one column per message size."""
        header = ["alpha_s", *(format_number(size) for size in self.message_sizes)]
        rows = (
            [format_number(alpha), *(format_number(value) for value in row)]
            for alpha, row in zip(self.alphas, self.ratios, strict=True)
        )
        return render_csv(header, rows)

    def to_dict(self) -> dict[str, Any]:
        """Return ``{kind, p, B, message_sizes, alphas, ratios}``."""
        return {
            "kind": str(self.kind),
            "p": self.p,
            "B": self.bandwidth,
            "message_sizes": list(self.message_sizes),
            "alphas": list(self.alphas),
            "ratios": [list(row) for row in self.ratios],
        }


def default_message_sizes() -> tuple[float, ...]:
    """Return 10 log-spaced message sizes from 1 KB to 1 GB."""
    return tuple(float(value) for value in np.logspace(3, 9, GRID_POINTS))


def default_alphas() -> tuple[float, ...]:
    """Return 10 log-spaced per-node latencies from 10 ns to 100 us."""
    return tuple(float(value) for value in np.logspace(-8, -4, GRID_POINTS))


def _validate_axis(values: Axis, name: str) -> tuple[float, ...]:
    if len(values) == 0:
        raise EmptyAxisError(f"{name} axis is empty")
    axis = tuple(float(value) for value in values)
    if any(value <= 0 for value in axis):
        raise ModelValidationError(f"{name} axis values must be positive")
    return axis


def ratio_grid(
    kind: CollectiveKind,
    p: int,
    bandwidth: float,
    message_sizes: Axis,
    alphas: Axis,
    *,
    max_workers: int = 1,
) -> RatioGrid:
    """Evaluate ``T_ring / T_FC`` for every ``(alpha, M)`` pair.

    Rows (one per latency) may be computed on a thread pool; they are placed by axis index
    so the result does not depend on completion order.

    Raises:
        EmptyAxisError: If either axis is empty.
    """
    sizes = _validate_axis(message_sizes, "message_sizes")
    latencies = _validate_axis(alphas, "alphas")
    if p < 2 or bandwidth <= 0:  # noqa: PLR2004
        raise ModelValidationError("ratio_grid needs p >= 2 and a positive bandwidth")
    size_array: FloatArray = np.asarray(sizes, dtype=np.float64)

    def _row(alpha: float) -> tuple[float, ...]:
        values = np.asarray(_ratio(kind, p, size_array, bandwidth, alpha), dtype=np.float64)
        return tuple(float(value) for value in values)

    rows: list[tuple[float, ...]] = [()] * len(latencies)
    with ThreadPoolExecutor(max_workers=max(1, int(max_workers))) as executor:
        futures: dict[Future[tuple[float, ...]], int] = {
            executor.submit(_row, alpha): index for index, alpha in enumerate(latencies)
        }
        for future in as_completed(futures):
            rows[futures[future]] = future.result()

    _LOGGER.debug(
        "analytic.ratio_grid",
        extra={"kind": str(kind), "p": p, "rows": len(latencies), "columns": len(sizes)},
    )
    return RatioGrid(
        kind=kind,
        p=p,
        bandwidth=bandwidth,
        message_sizes=sizes,
        alphas=latencies,
        ratios=tuple(rows),
    )


def crossover_alpha(
    kind: CollectiveKind,
    p: int,
    bandwidth: float,
    message_bytes: float,
    target_ratio: float,
) -> float:
    """Return the latency at which ``T_ring / T_FC`` equals ``target_ratio``.

    The ratio rises monotonically in ``alpha`` from its bandwidth-only value toward the
    pure-latency limit (``p-1`` for allreduce, ``gamma(p)`` for alltoall), so the root is
    bracketed by doubling and refined with Brent's method.

    Raises:
        ModelValidationError: If ``target_ratio`` is not strictly inside the attainable range.
    """
    params = CollectiveParams(p=p, message_bytes=message_bytes, bandwidth=bandwidth)
    if params.message_bytes == 0:
        raise ModelValidationError("crossover_alpha needs a positive message size")
    floor = float(_ratio(kind, p, params.message_bytes, bandwidth, 0.0))
    ceiling = float(p - 1 if kind is CollectiveKind.ALLREDUCE else gamma(p))
    if not floor < target_ratio < ceiling:
        raise ModelValidationError(
            f"target ratio {target_ratio} outside ({floor:.6g}, {ceiling:.6g}) for {kind}"
        )

    def _excess(alpha: float) -> float:
        return float(_ratio(kind, p, message_bytes, bandwidth, alpha)) - target_ratio

    upper = message_bytes / bandwidth
    for _ in range(_BRACKET_LIMIT):
        if _excess(upper) > 0:
            break
        upper *= 2
    root = float(brentq(_excess, 0.0, upper, xtol=1e-30, rtol=1e-12))
    _LOGGER.debug(
        "analytic.crossover_alpha",
        extra={"kind": str(kind), "p": p, "target_ratio": target_ratio, "alpha": root},
    )
    return root


__all__ = [
    "Axis",
    "EmptyAxisError",
    "RatioGrid",
    "allreduce_fc",
    "allreduce_ring",
    "alltoall_fc",
    "alltoall_ring",
    "collective_cost",
    "crossover_alpha",
    "default_alphas",
    "default_message_sizes",
    "ratio_grid",
    "select_family",
]
