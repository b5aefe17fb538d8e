"""Seeded generator of hierarchical count streams with known seasonality,
sparsity, heavy-hitter churn, and labeled injected spikes."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .domain import CategoryPath, ConfigError, HierarchySchema


@dataclass(frozen=True)
class SpikeSpec:
    """Multiply the rate of every leaf under ``path`` by ``multiplier`` for
    ``duration`` units starting at ``start_unit``."""

    path: str
    start_unit: int
    duration: int
    multiplier: float

    @classmethod
    def parse(cls, text: str) -> "SpikeSpec":
        try:
            path, start, duration, mult = text.rsplit(":", 3)
            return cls(path, int(start), int(duration), float(mult))
        except ValueError as exc:
            raise ConfigError([f"bad spike spec {text!r} (want path:start:duration:mult)"]) from exc


@dataclass(frozen=True)
class GeneratorConfig:
    fanouts: tuple[int, ...] = (4, 3)
    base_rate: float = 4.0
    diurnal_amplitude: float = 0.6
    diurnal_phase: float = 0.0          # in timeunits
    weekly_amplitude: float = 0.0
    day_period: int = 96                # timeunits
    week_period: int = 672              # timeunits
    sparsity: float = 0.0               # zero-inflation probability per leaf-unit
    leaf_spread: float = 0.0            # rate unevenness across sibling leaves
    churn_period: int = 0               # units between hot-subtree rotations; 0 disables
    churn_boost: float = 4.0
    spikes: tuple[SpikeSpec, ...] = ()
    n_units: int = 2016
    delta: int = 900
    start_time: int = 1588291200        # 2020-05-01T00:00:00Z
    seed: int = 7

    _INT_KEYS = ("churn_period", "n_units", "delta", "start_time", "seed",
                 "day_period", "week_period")
    _FLOAT_KEYS = ("base_rate", "diurnal_amplitude", "diurnal_phase",
                   "weekly_amplitude", "sparsity", "leaf_spread", "churn_boost")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, str]]) -> "GeneratorConfig":
        kwargs: dict = {}
        spikes: list[SpikeSpec] = []
        for key, value in pairs:
            if key == "spike":
                spikes.append(SpikeSpec.parse(value))
            elif key == "fanouts":
                kwargs[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key in cls._INT_KEYS:
                kwargs[key] = int(value)
            elif key in cls._FLOAT_KEYS:
                kwargs[key] = float(value)
            else:
                raise ConfigError([f"unknown generator key {key!r}"])
        if spikes:
            kwargs["spikes"] = tuple(spikes)
        return cls(**kwargs)

    def with_overrides(self, **kwargs) -> "GeneratorConfig":
        return replace(self, **kwargs)


def validate_generator(cfg: GeneratorConfig) -> list[str]:
    problems = []
    if not cfg.fanouts or any(f < 1 for f in cfg.fanouts):
        problems.append("fanouts must be positive")
    if cfg.base_rate < 0:
        problems.append("base_rate must be non-negative")
    for name in ("diurnal_amplitude", "weekly_amplitude"):
        if not 0.0 <= getattr(cfg, name) <= 1.0:
            problems.append(f"{name} must lie in [0, 1]")
    if not 0.0 <= cfg.sparsity < 1.0:
        problems.append("sparsity must lie in [0, 1)")
    if cfg.day_period < 1 or cfg.week_period < 1:
        problems.append("seasonal periods must be positive")
    if cfg.n_units < 1:
        problems.append("n_units must be positive")
    if cfg.delta < 1:
        problems.append("delta must be positive")
    if cfg.churn_period < 0:
        problems.append("churn_period must be non-negative")
    for s in cfg.spikes:
        if s.duration < 1 or s.multiplier <= 0 or s.start_unit < 0:
            problems.append(f"bad spike {s}")
    return problems


@dataclass
class LabeledStream:
    """Generated records plus the ground-truth (unit start, path) spike labels."""

    leaf_paths: list[str]
    records: list[tuple[int, str]]
    labels: list[tuple[int, str]]
    unit_counts: list[dict[int, int]] = field(repr=False, default_factory=list)
    schema: HierarchySchema | None = field(repr=False, default=None)
    start_time: int = 0
    delta: int = 0


def _schema_paths(fanouts: Sequence[int]) -> list[str]:
    paths = [["all"]]
    for level, fan in enumerate(fanouts):
        letter = chr(ord("a") + level)
        paths = [p + [f"{letter}{i}"] for p in paths for i in range(fan)]
    return ["/".join(p) for p in paths]


def generate(cfg: GeneratorConfig) -> LabeledStream:
    """Draw per-leaf, per-unit Poisson counts around a seasonal rate surface.

    rate = base * (1 + A_d sin(2pi (t + phase)/day)) * (1 + A_w sin(2pi t/week)),
    boosted for the rotating hot subtree and the configured spikes, then
    zero-inflated to the sparsity target. Identical seeds give identical
    streams down to the byte.
    """
    problems = validate_generator(cfg)
    if problems:
        raise ConfigError(problems)
    leaf_paths = _schema_paths(cfg.fanouts)
    schema = HierarchySchema([CategoryPath.parse(p) for p in leaf_paths])
    leaves = list(schema.leaf_ids)
    leaf_index = {n: i for i, n in enumerate(leaves)}
    n_leaves = len(leaves)

    t = np.arange(cfg.n_units)
    seasonal = 1.0 + cfg.diurnal_amplitude * np.sin(
        2.0 * np.pi * (t + cfg.diurnal_phase) / cfg.day_period
    )
    seasonal *= 1.0 + cfg.weekly_amplitude * np.sin(2.0 * np.pi * t / cfg.week_period)
    # deterministic unevenness across sibling leaves: the i-th child of each
    # parent runs at base * (1 + spread * i / (fan - 1))
    per_leaf = np.full(n_leaves, cfg.base_rate)
    if cfg.leaf_spread > 0.0 and cfg.fanouts[-1] > 1:
        fan = cfg.fanouts[-1]
        sibling = np.arange(n_leaves) % fan
        per_leaf *= 1.0 + cfg.leaf_spread * sibling / (fan - 1)
    rate = np.clip(seasonal, 0.0, None)[:, None] * per_leaf

    if cfg.churn_period > 0 and len(cfg.fanouts) >= 1:
        top_of_leaf = np.array(
            [_top_level_index(schema, n) for n in leaves]
        )
        hot = (t // cfg.churn_period) % cfg.fanouts[0]
        rate *= np.where(hot[:, None] == top_of_leaf[None, :], cfg.churn_boost, 1.0)

    labels: list[tuple[int, str]] = []
    for s in cfg.spikes:
        node = schema.resolve(s.path)  # raises UnknownSegment for bad paths
        targets = [n for n in (node, *schema.descendants(node)) if schema.is_leaf(n)]
        cols = [leaf_index[n] for n in targets]
        lo, hi = s.start_unit, min(s.start_unit + s.duration, cfg.n_units)
        rate[lo:hi, cols] = rate[lo:hi, cols] * s.multiplier
        for u in range(lo, hi):
            labels.append((cfg.start_time + u * cfg.delta, s.path))

    rng = np.random.default_rng(cfg.seed)
    counts = rng.poisson(rate)
    if cfg.sparsity > 0.0:
        counts[rng.random(counts.shape) < cfg.sparsity] = 0

    records: list[tuple[int, str]] = []
    unit_counts: list[dict[int, int]] = []
    for u in range(cfg.n_units):
        unit_start = cfg.start_time + u * cfg.delta
        per_unit: dict[int, int] = {}
        for j, leaf in enumerate(leaves):
            c = int(counts[u, j])
            if c == 0:
                continue
            per_unit[leaf] = c
            offsets = np.sort(rng.integers(0, cfg.delta, size=c))
            p = schema.path_str(leaf)
            records.extend((int(unit_start + off), p) for off in offsets)
        unit_counts.append(per_unit)

    return LabeledStream(
        leaf_paths=leaf_paths,
        records=records,
        labels=sorted(set(labels)),
        unit_counts=unit_counts,
        schema=schema,
        start_time=cfg.start_time,
        delta=cfg.delta,
    )


def _top_level_index(schema: HierarchySchema, leaf: int) -> int:
    node = leaf
    while schema.depth[node] > 1:
        node = schema.parent[node]
    return schema.children[0].index(node)
