"""Explicit node lists: uniform and geometrically graded segments."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

MAX_SPACING_RATIO = 1.2


class GridError(ValueError):
    """Raised when a node list cannot be built from the requested segments."""


def uniform_segment(start: float, stop: float, h: float) -> np.ndarray:
    """Equally spaced nodes from start to stop (both included), spacing ≤ h."""

    if not stop > start:
        raise GridError(f"empty segment [{start}, {stop}]")
    if not h > 0.0:
        raise GridError(f"spacing must be positive, got {h}")
    cells = max(1, math.ceil((stop - start) / h - 1e-9))
    return np.linspace(start, stop, cells + 1)


def graded_segment(
    start: float,
    stop: float,
    h_fine: float,
    *,
    ratio: float = 1.1,
    h_max: float = 1.0,
    fine_end: str = "stop",
) -> np.ndarray:
    """Nodes whose spacing grows by `ratio` away from `fine_end`, capped at h_max."""

    if not stop > start:
        raise GridError(f"empty segment [{start}, {stop}]")
    if not (1.0 <= ratio <= MAX_SPACING_RATIO):
        raise GridError(f"grading ratio must lie in [1, {MAX_SPACING_RATIO}], got {ratio}")
    length = stop - start
    if length < 5.0 * h_fine:
        return uniform_segment(start, stop, h_fine)
    h_cap = max(min(h_max, length / 5.0), h_fine)
    spacings: list[float] = []
    total = 0.0
    h = h_fine
    while total < length:
        spacings.append(h)
        total += h
        h = min(h * ratio, h_cap)
    # stop at whichever cell count lands closer to the segment length
    if len(spacings) > 1 and total - length > length - (total - spacings[-1]):
        total -= spacings.pop()
    widths = np.asarray(spacings) * (length / total)
    if fine_end == "stop":
        widths = widths[::-1]
    nodes = start + np.concatenate(([0.0], np.cumsum(widths)))
    nodes[-1] = stop
    return nodes


def join_segments(segments: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate segments that share their end points."""

    pieces = [np.asarray(segments[0], dtype=float)]
    for segment in segments[1:]:
        segment = np.asarray(segment, dtype=float)
        if not math.isclose(segment[0], pieces[-1][-1], rel_tol=0.0, abs_tol=1e-9):
            raise GridError("segments do not share end points")
        pieces.append(segment[1:])
    return np.concatenate(pieces)


def spacing_ratio(nodes: np.ndarray) -> float:
    """Largest ratio between neighbouring cell widths."""

    widths = np.diff(np.asarray(nodes, dtype=float))
    if widths.size < 2:
        return 1.0
    quotient = widths[1:] / widths[:-1]
    return float(np.max(np.maximum(quotient, 1.0 / quotient)))


def insert_nodes(nodes: np.ndarray, extra: Sequence[float]) -> np.ndarray:
    """Return nodes with `extra` points inserted exactly (duplicates merged)."""

    base = np.asarray(nodes, dtype=float)
    merged = np.union1d(base, np.asarray(extra, dtype=float))
    keep = np.concatenate(([True], np.diff(merged) > 1e-12 * max(1.0, float(np.max(np.abs(merged))))))
    return merged[keep]
