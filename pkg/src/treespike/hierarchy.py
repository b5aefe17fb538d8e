"""Weighted-tree passes: raw weights, succinct heavy hitters, and the exact
window-rescanning baseline used as correctness oracle and performance foil."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .domain import HierarchySchema


def accumulate(schema: HierarchySchema, counts: Mapping[int, int]) -> np.ndarray:
    """Raw per-node weights for one timeunit: leaf count, interior sum of children."""
    raw = np.zeros(schema.node_count)
    for leaf, c in counts.items():
        raw[leaf] = c
    for n in schema.bottom_up:
        p = schema.parent[n]
        if p != -1:
            raw[p] += raw[n]
    return raw


def compute_shhh(
    schema: HierarchySchema, counts: Mapping[int, int], theta: float
) -> tuple[set[int], np.ndarray]:
    """One bottom-up pass computing modified weights and the succinct heavy hitter set.

    A node's modified weight is its own count plus the residuals of children
    that are not themselves heavy hitters; heavy hitter children pass nothing
    up. Membership is weight >= theta (ties included). The set satisfying this
    recursion is unique, so one pass suffices.
    """
    weight = np.zeros(schema.node_count)
    residual = np.zeros(schema.node_count)
    members: set[int] = set()
    for n in schema.bottom_up:
        w = weight[n] + counts.get(n, 0) if schema.is_leaf(n) else weight[n]
        if w >= theta:
            members.add(n)
            residual[n] = 0.0
        else:
            residual[n] = w
        weight[n] = w
        p = schema.parent[n]
        if p != -1:
            weight[p] += residual[n]
    return members, weight


def residual_pass(
    schema: HierarchySchema, counts: Mapping[int, int], members: set[int]
) -> np.ndarray:
    """Per-node residual weights for one timeunit under a FIXED member set.

    Members absorb their subtree's unclaimed counts and pass nothing up, so
    value[n] counts exactly the items whose lowest member ancestor is n.
    """
    value = np.zeros(schema.node_count)
    for n in schema.bottom_up:
        if schema.is_leaf(n):
            value[n] += counts.get(n, 0)
        p = schema.parent[n]
        if p != -1 and n not in members:
            value[p] += value[n]
    return value


def sta_step(
    schema: HierarchySchema,
    unit_counts: Sequence[Mapping[int, int]],
    theta: float,
) -> tuple[set[int], dict[int, np.ndarray], np.ndarray]:
    """One instance of the strawman: recompute the member set on the last unit,
    then rebuild every member's residual series by walking all retained units.

    Returns (members, series for members plus the root, last-unit modified
    weights). Cost is proportional to window length times tree size; that is
    the point of keeping it.
    """
    members, weight = compute_shhh(schema, unit_counts[-1], theta)
    tracked = sorted(members | {0})
    series = {n: np.empty(len(unit_counts)) for n in tracked}
    for i, counts in enumerate(unit_counts):
        value = residual_pass(schema, counts, members)
        for n in tracked:
            series[n][i] = value[n]
    return members, series, weight
