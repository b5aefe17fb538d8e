"""Bucketing of record streams into timeunits and the sliding window over them."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

from .domain import HierarchySchema, Record


class OutOfWindow(ValueError):
    """A record's timestamp falls outside the current window."""

    def __init__(self, record: Record, window: "Window"):
        super().__init__(
            f"record at t={record.timestamp} outside window [{window.start}, {window.end})"
        )
        self.record = record


@dataclass(frozen=True)
class Window:
    """A window of ``length`` timeunits of ``delta`` seconds starting at ``start``."""

    start: int
    delta: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length * self.delta

    def unit_index(self, timestamp: int) -> int:
        return (timestamp - self.start) // self.delta

    def unit_start(self, index: int) -> int:
        return self.start + index * self.delta


def bucket(
    window: Window, batch: Iterable[Record], schema: HierarchySchema
) -> dict[int, dict[int, int]]:
    """Tally a batch into per-timeunit leaf counts.

    Intervals are half-open: a record at time t lands in the unit covering
    [unit_start, unit_start + delta). Records outside the window raise
    OutOfWindow; non-leaf categories are rejected.
    """
    out: dict[int, dict[int, int]] = {}
    for rec in batch:
        if not window.start <= rec.timestamp < window.end:
            raise OutOfWindow(rec, window)
        node = schema.resolve(rec.category)
        if not schema.is_leaf(node):
            raise ValueError(f"record category {rec.category} is not a leaf")
        counts = out.setdefault(window.unit_index(rec.timestamp), {})
        counts[node] = counts.get(node, 0) + 1
    return out


def shift(window: Window, offset: int) -> Window:
    """Advance the window by ``offset`` seconds (a non-negative multiple of delta).

    Sub-delta shifts are handled by re-expressing the problem at the finer
    granularity (see the multi-timescale series ladder), not here.
    """
    if offset < 0:
        raise ValueError("window shift must be non-negative")
    if offset % window.delta != 0:
        raise ValueError(
            f"shift {offset} is not a multiple of delta {window.delta}; "
            "use a finer base timeunit for sub-delta shifts"
        )
    if offset == 0:
        return window
    return replace(window, start=window.start + offset)
