"""Shared fixtures and independent oracles used across the test suite.

The oracles deliberately avoid the library's own traversal code: heavy hitter
sets are verified through the defining fixpoint, and residual series are
re-derived from raw leaf counts via subtree sums.
"""

from __future__ import annotations

import numpy as np
import pytest

from treespike import CategoryPath, HierarchySchema


def schema_from(*paths: str) -> HierarchySchema:
    return HierarchySchema([CategoryPath.parse(p) for p in paths])


@pytest.fixture
def tiny_schema() -> HierarchySchema:
    # root with two leaves
    return schema_from("all/x", "all/y")


@pytest.fixture
def three_level_schema() -> HierarchySchema:
    return schema_from(
        "all/a0/b0", "all/a0/b1", "all/a1/b0", "all/a1/b1", "all/a2/b0"
    )


def verify_shhh_fixpoint(schema, counts, theta, members, weights=None) -> bool:
    """Check the claimed set against the defining recursion: recompute every
    modified weight assuming exactly this membership, then confirm membership
    is weight >= theta. Uniqueness of the fixpoint makes this a full check."""
    w = {}
    for n in schema.bottom_up:
        if schema.is_leaf(n):
            w[n] = float(counts.get(n, 0))
        else:
            w[n] = float(
                sum(w[c] for c in schema.children[n] if c not in members)
            )
    implied = {n for n in range(schema.node_count) if w[n] >= theta}
    if implied != set(members):
        return False
    if weights is not None:
        return all(abs(w[n] - weights[n]) < 1e-9 for n in range(schema.node_count))
    return True


def raw_series(schema, unit_counts, node) -> np.ndarray:
    """A node's raw weight per unit, via direct leaf-descendant sums."""
    leaves = [
        m for m in (node, *schema.descendants(node)) if schema.is_leaf(m)
    ]
    return np.array(
        [float(sum(c.get(l, 0) for l in leaves)) for c in unit_counts]
    )


def residual_series_oracle(schema, unit_counts, members, node) -> np.ndarray:
    """Residual series from first principles: raw series minus the raw series
    of every member descendant with no member strictly in between."""

    def is_maximal(m: int) -> bool:
        p = schema.parent[m]
        while p != node:
            if p in members:
                return False
            p = schema.parent[p]
        return True

    out = raw_series(schema, unit_counts, node)
    for m in schema.descendants(node):
        if m in members and is_maximal(m):
            out -= raw_series(schema, unit_counts, m)
    return out


def random_hierarchy(rng: np.random.Generator, max_leaves: int = 300) -> HierarchySchema:
    """A random tree of depth <= 5 with fanouts <= 8, capped in total size."""
    depth = int(rng.integers(2, 6))
    fanouts = [int(rng.integers(2, 9)) for _ in range(depth)]
    paths = [["all"]]
    for level, fan in enumerate(fanouts):
        nxt = []
        for p in paths:
            keep = 1 if len(nxt) > max_leaves else max(1, int(rng.integers(1, fan + 1)))
            nxt.extend(p + [f"l{level}n{i}"] for i in range(keep))
        paths = nxt
    return schema_from(*["/".join(p) for p in paths])


def reference_holt_winters(values, alpha, beta, gamma, periods, weights):
    """Literal array-based statement of the seasonal recurrences, kept
    independent of the package's ring implementation. Returns the forecasts
    for indices [2 * max(periods), len(values))."""
    values = [float(v) for v in values]
    u_max = max(periods)
    m = 2 * u_max
    level = sum(values[:m]) / m
    trend = (sum(values[u_max:m]) - sum(values[:u_max])) / (2.0 * u_max)
    seasonal: dict[tuple[int, int], float] = {}
    for u in periods:
        for t in range(m):
            # each ring initializes from its own last two cycles only
            occ = [j for j in range(m - 2 * u, m) if j % u == t % u]
            seasonal[(u, t)] = sum(values[j] - level for j in occ) / len(occ)
    forecasts = []
    for t in range(m, len(values)):
        s_mix = sum(w * seasonal[(u, t - u)] for w, u in zip(weights, periods))
        forecasts.append(level + trend + s_mix)
        new_level = alpha * (values[t] - s_mix) + (1 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1 - beta) * trend
        resid = values[t] - new_level
        for u in periods:
            seasonal[(u, t)] = gamma * resid + (1 - gamma) * seasonal[(u, t - u)]
        level = new_level
    return forecasts
