"""Core data types: category paths, records, the hierarchy schema, and detector configuration."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

PATH_SEPARATOR = "/"

_SPLIT_RULE_RE = re.compile(r"^(uniform|last_time_unit|long_term_history|ewma\((\d+(\.\d+)?)\))$")


class UnknownSegment(KeyError):
    """A category path names a segment the schema does not contain.

    ``position`` is the 1-based index of the offending segment.
    """

    def __init__(self, path: str, position: int):
        super().__init__(f"unknown segment at position {position} in path {path!r}")
        self.path = path
        self.position = position


class ConfigError(ValueError):
    """One or more detector configuration fields are invalid."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass(frozen=True)
class CategoryPath:
    """An ordered root-to-node list of category labels."""

    segments: tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("category path must have at least one segment")
        for seg in self.segments:
            if not seg or PATH_SEPARATOR in seg:
                raise ValueError(f"bad path segment {seg!r}")

    @classmethod
    def parse(cls, text: str) -> "CategoryPath":
        return cls(tuple(text.split(PATH_SEPARATOR)))

    @property
    def depth(self) -> int:
        return len(self.segments)

    def __str__(self) -> str:
        return PATH_SEPARATOR.join(self.segments)


@dataclass(frozen=True)
class Record:
    """One stream item: a leaf category plus a timestamp in epoch seconds."""

    category: CategoryPath
    timestamp: int


class HierarchySchema:
    """Immutable category tree. Node ids are dense ints, root is id 0 at depth 0.

    Built from the set of root-to-leaf paths; every declared path must end at a
    leaf (a path that is a prefix of another is rejected).
    """

    def __init__(self, paths: Iterable[CategoryPath]):
        paths = list(paths)
        if not paths:
            raise ValueError("schema needs at least one path")
        roots = {p.segments[0] for p in paths}
        if len(roots) != 1:
            raise ValueError(f"schema paths disagree on the root label: {sorted(roots)}")

        self.labels: list[str] = [paths[0].segments[0]]
        self.parent: list[int] = [-1]
        self.children: list[list[int]] = [[]]
        self.depth: list[int] = [0]
        self._child_index: list[dict[str, int]] = [{}]
        declared: set[int] = set()

        for p in paths:
            node = 0
            for seg in p.segments[1:]:
                nxt = self._child_index[node].get(seg)
                if nxt is None:
                    nxt = len(self.labels)
                    self.labels.append(seg)
                    self.parent.append(node)
                    self.children.append([])
                    self.depth.append(self.depth[node] + 1)
                    self._child_index.append({})
                    self.children[node].append(nxt)
                    self._child_index[node][seg] = nxt
                node = nxt
            declared.add(node)

        for node in declared:
            if self.children[node]:
                raise ValueError(
                    f"declared path {self._build_path(node)!r} names an interior node"
                )

        self.node_count = len(self.labels)
        self.leaf_ids = tuple(n for n in range(self.node_count) if not self.children[n])
        self.max_depth = max(self.depth)
        order = sorted(range(self.node_count), key=lambda n: self.depth[n])
        self.top_down = tuple(order)
        self.bottom_up = tuple(reversed(order))
        self._paths = tuple(self._build_path(n) for n in range(self.node_count))
        self._descendants = tuple(self._build_descendants(n) for n in range(self.node_count))

    def _build_path(self, node: int) -> str:
        parts = []
        while node != -1:
            parts.append(self.labels[node])
            node = self.parent[node]
        return PATH_SEPARATOR.join(reversed(parts))

    def _build_descendants(self, node: int) -> tuple[int, ...]:
        out: list[int] = []
        stack = list(self.children[node])
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(self.children[n])
        return tuple(out)

    def resolve(self, path: CategoryPath | str) -> int:
        """Return the node id for a root-to-node path; raise UnknownSegment otherwise."""
        if isinstance(path, str):
            path = CategoryPath.parse(path)
        if path.segments[0] != self.labels[0]:
            raise UnknownSegment(str(path), 1)
        node = 0
        for pos, seg in enumerate(path.segments[1:], start=2):
            nxt = self._child_index[node].get(seg)
            if nxt is None:
                raise UnknownSegment(str(path), pos)
            node = nxt
        return node

    def is_leaf(self, node: int) -> bool:
        return not self.children[node]

    def path_str(self, node: int) -> str:
        return self._paths[node]

    def path_of(self, node: int) -> CategoryPath:
        return CategoryPath.parse(self._paths[node])

    def descendants(self, node: int) -> tuple[int, ...]:
        return self._descendants[node]


def resolve_path(schema: HierarchySchema, path: CategoryPath | str) -> int:
    return schema.resolve(path)


@dataclass(frozen=True)
class DetectorConfig:
    """All knobs of the detection pipeline.

    Time quantities are in seconds. ``periods`` holds one or two seasonal
    periods, each a multiple of ``delta``. ``window_len`` counts timeunits.
    ``split_rule`` is one of uniform | last_time_unit | long_term_history |
    ewma(RATE). ``ref_levels`` is the number of top hierarchy levels (root
    excluded) that keep reference series of unmodified weights.
    """

    delta: int = 900
    shift: int = 900
    window_len: int = 8064
    theta: float = 25.0
    rt: float = 2.8
    dt: float = 8.0
    alpha: float = 0.1
    beta: float = 0.01
    gamma: float = 0.1
    periods: tuple[int, ...] = (86400,)
    xi: float = 1.0
    split_rule: str = "uniform"
    ref_levels: int = 2
    lam: int = 4
    eta: int = 1

    _FIELD_KEYS = (
        "delta", "shift", "window_len", "theta", "rt", "dt", "alpha", "beta",
        "gamma", "periods", "xi", "split_rule", "ref_levels", "lambda", "eta",
    )

    @classmethod
    def from_mapping(cls, raw: Mapping[str, str]) -> "DetectorConfig":
        """Build a config from flat key=value text values; unknown keys are rejected."""
        kwargs = {}
        for key, value in raw.items():
            if key not in cls._FIELD_KEYS:
                raise ConfigError([f"unknown config key {key!r}"])
            if key in ("delta", "shift", "window_len", "ref_levels", "lambda", "eta"):
                kwargs["lam" if key == "lambda" else key] = int(value)
            elif key == "periods":
                kwargs[key] = tuple(int(v.strip()) for v in value.split(",") if v.strip())
            elif key == "split_rule":
                kwargs[key] = value.strip()
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)

    def period_units(self) -> tuple[int, ...]:
        return tuple(p // self.delta for p in self.periods)

    def with_overrides(self, **kwargs) -> "DetectorConfig":
        return replace(self, **kwargs)


def validate_config(cfg: DetectorConfig) -> list[str]:
    """Check every config invariant; return all violations (empty list means ok)."""
    problems = []
    if cfg.delta <= 0:
        problems.append("delta must be positive")
    if cfg.shift <= 0:
        problems.append("shift must be positive")
    elif cfg.delta > 0 and cfg.shift % cfg.delta != 0 and cfg.delta % cfg.shift != 0:
        problems.append("shift must be a multiple or a divisor of delta")
    if not 1 <= len(cfg.periods) <= 2:
        problems.append("periods must have one or two entries")
    for p in cfg.periods:
        if p <= 0 or (cfg.delta > 0 and p % cfg.delta != 0):
            problems.append(f"period {p} must be a positive multiple of delta")
    if cfg.delta > 0 and cfg.periods and all(p > 0 and p % cfg.delta == 0 for p in cfg.periods):
        need = 2 * max(cfg.period_units())
        if cfg.window_len < need:
            problems.append(
                f"window_len {cfg.window_len} is below two seasonal cycles ({need} timeunits)"
            )
    if cfg.theta <= 0:
        problems.append("theta must be positive")
    if cfg.rt <= 1:
        problems.append("rt must exceed 1")
    if cfg.dt < 0:
        problems.append("dt must be non-negative")
    for name in ("alpha", "beta", "gamma", "xi"):
        v = getattr(cfg, name)
        if not 0.0 <= v <= 1.0:
            problems.append(f"{name} must lie in [0, 1]")
    if not _SPLIT_RULE_RE.match(cfg.split_rule):
        problems.append(f"unrecognized split_rule {cfg.split_rule!r}")
    if cfg.ref_levels < 0:
        problems.append("ref_levels must be non-negative")
    if cfg.lam < 1:
        problems.append("lambda must be a positive integer")
    if cfg.eta < 1:
        problems.append("eta must be a positive integer")
    return problems
