"""The adaptive detector: a single weighted tree whose heavy hitter set and
attached time series are relocated per instance by split and merge, never by
re-scanning the window.

Per instance: recompute modified weights bottom-up, flag the ancestors of
newly heavy nodes, split flagged members' series down to children by a scale
ratio, merge sub-threshold members' series up to their parents, fix the root,
then append each survivor's weight and forecast in constant time. Node weights
are written only by the bottom-up weight pass; split and merge move series and
membership but leave weights alone, which keeps per-unit mass conserved
exactly.

The root is special twice over: it keeps a residual series whether or not it
is currently a heavy hitter, and it may split without being one (otherwise a
new heavy hitter under a chain of light ancestors could never receive a
series).
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from itertools import islice
from time import perf_counter
from typing import Deque, Mapping, Sequence

import numpy as np

from .detect import AnomalyEvent, detect, make_event
from .domain import HierarchySchema
from .forecast import HwParams, TrackedSeries
from .hierarchy import accumulate, sta_step
from .timing import StageClock

ROOT = 0

_EWMA_RULE = re.compile(r"^ewma\((\d+(?:\.\d+)?)\)$")


@dataclass(frozen=True)
class SplitRule:
    """Policy for the per-child statistic X used in split ratios X_c / sum(X).

    uniform: X = 1. last_time_unit: X = the child's raw weight in the previous
    timeunit. long_term_history: X = the child's cumulative raw weight since
    stream start. ewma: X = an exponentially smoothed raw weight with the
    given rate.
    """

    name: str
    rate: float | None = None

    @classmethod
    def parse(cls, text: str) -> "SplitRule":
        if text in ("uniform", "last_time_unit", "long_term_history"):
            return cls(text)
        m = _EWMA_RULE.match(text)
        if m:
            return cls("ewma", float(m.group(1)))
        raise ValueError(f"unrecognized split rule {text!r}")


def update_ishh_and_weight(
    schema: HierarchySchema,
    weight: np.ndarray,
    ishh: np.ndarray,
    theta: float,
    node: int = ROOT,
) -> float:
    """Recursive bottom-up weight pass: children pass their residual up, heavy
    nodes keep theirs and pass zero. Leaf weights must be pre-loaded with the
    unit's counts. Returns the residual handed to the caller's parent."""
    w = weight[node]
    for c in schema.children[node]:
        w += update_ishh_and_weight(schema, weight, ishh, theta, c)
    weight[node] = w
    if w >= theta:
        ishh[node] = True
        return 0.0
    ishh[node] = False
    return w


def mark_tosplit(
    schema: HierarchySchema,
    ishh: np.ndarray,
    tosplit: np.ndarray,
    members: set[int],
) -> None:
    """Flag every node that must hand series down: any node that is heavy (or
    already flagged) without being a current member propagates the flag to its
    parent, so the chain climbs exactly to the lowest member above each new
    heavy hitter (or to the root)."""
    for n in schema.bottom_up:
        if n == ROOT:
            continue
        if (ishh[n] or tosplit[n]) and n not in members:
            tosplit[schema.parent[n]] = True


class MultiScaleSeries:
    """Series ladder over scales lam^(i-1) base timeunits, 1 <= i <= levels.

    Each append lands on scale 1 with an exponentially smoothed forecast;
    every lam appends at a scale roll up as one summed append at the next.
    Scales trim back to the window length whenever they outgrow it by lam, so
    a ladder costs amortized constant work per base append. ``calls`` counts
    every (scale-level) append for the amortization bound.
    """

    def __init__(self, lam: int, levels: int, window_len: int, alpha: float):
        if lam < 1 or levels < 1:
            raise ValueError("scale base and level count must be positive")
        self.lam = lam
        self.levels = levels
        self.window_len = window_len
        self.alpha = alpha
        self.actual: list[Deque[float]] = [deque() for _ in range(levels)]
        self.forecast: list[Deque[float]] = [deque() for _ in range(levels)]
        self._pending = [0.0] * levels
        self._pending_n = [0] * levels
        self.calls = 0

    def append(self, value: float) -> None:
        self._update(float(value), 1)

    def _update(self, value: float, scale: int) -> None:
        self.calls += 1
        i = scale - 1
        fc = self.forecast[i]
        # first append seeds the smoothed forecast with the observation itself
        fc.append(self.alpha * value + (1.0 - self.alpha) * fc[-1] if fc else value)
        self.actual[i].append(value)
        if scale < self.levels:
            self._pending[i] += value
            self._pending_n[i] += 1
            if self._pending_n[i] == self.lam:
                rolled = self._pending[i]
                self._pending[i] = 0.0
                self._pending_n[i] = 0
                self._update(rolled, scale + 1)
        if len(self.actual[i]) == self.window_len + self.lam:
            for _ in range(self.lam):
                self.actual[i].popleft()
                self.forecast[i].popleft()


def update_ts_multiscale(ladder: MultiScaleSeries, value: float) -> MultiScaleSeries:
    ladder.append(value)
    return ladder


def _history_equal(a: Deque[float], b: Deque[float]) -> bool:
    # the oldest entry is about to slide out of the window; ignore it
    return all(x == y for x, y in zip(islice(a, 1, None), islice(b, 1, None)))


class AdaDetector:
    """Single-tree online detector over one hierarchy.

    Drive it with ``bootstrap`` over the first full window of unit counts,
    then ``step`` once per subsequent timeunit. Events are emitted for the
    detection unit of each call.
    """

    def __init__(
        self,
        schema: HierarchySchema,
        params: HwParams,
        *,
        theta: float,
        rt: float,
        dt: float,
        split_rule: SplitRule = SplitRule("uniform"),
        ref_levels: int = 0,
        unit0_time: int = 0,
        delta: int = 1,
        ladder_lam: int = 0,
        ladder_levels: int = 0,
    ):
        self.schema = schema
        self.params = params
        self.theta = theta
        self.rt = rt
        self.dt = dt
        self.rule = split_rule
        self.ref_levels = ref_levels
        self.unit0_time = unit0_time
        self.delta = delta

        n = schema.node_count
        self.weight = np.zeros(n)
        self.raw = np.zeros(n)
        self.ishh = np.zeros(n, dtype=bool)
        self.washh = np.zeros(n, dtype=bool)
        self.tosplit = np.zeros(n, dtype=bool)
        self.members: set[int] = set()
        self.series: dict[int, TrackedSeries] = {}
        self.ref_nodes = tuple(
            m for m in schema.top_down if 1 <= schema.depth[m] <= ref_levels
        )
        self.refs: dict[int, Deque[float]] = {
            m: deque(maxlen=params.window_len) for m in self.ref_nodes
        }
        self.stat_last = np.zeros(n)
        self.stat_cum = np.zeros(n)
        self.stat_ewma = np.zeros(n)
        self._ewma_rate = split_rule.rate if split_rule.rate is not None else 0.5
        self.next_unit = 0
        self.peak_series = 0
        self.clock = StageClock()
        self.ladders: dict[int, MultiScaleSeries] | None = None
        if ladder_lam and ladder_levels:
            self._ladder_args = (ladder_lam, ladder_levels, params.window_len)
            self.ladders = {}

    # ------------------------------------------------------------------ setup

    def bootstrap(self, units: Sequence[Mapping[int, int]]) -> list[AnomalyEvent]:
        """First instance: one full window-rescanning pass builds the member
        set, every member's residual series, the root's residual series, the
        reference series, and the split statistics."""
        if len(units) != self.params.window_len:
            raise ValueError(
                f"bootstrap needs exactly {self.params.window_len} timeunits"
            )
        t0 = perf_counter()
        members, series, weight = sta_step(self.schema, units, self.theta)
        self.members = members
        self.weight = weight
        self.ishh[:] = weight >= self.theta
        t1 = perf_counter()
        for node, values in series.items():
            self.series[node] = TrackedSeries.from_history(values, self.params, 0)
        for i, counts in enumerate(units):
            raw = accumulate(self.schema, counts)
            for m in self.ref_nodes:
                self.refs[m].append(raw[m])
            self._update_stats(raw)
        self.raw = accumulate(self.schema, units[-1])
        if self.ladders is not None:
            for n in sorted(self.members | {ROOT}):
                ladder = self._new_ladder()
                for v in self.series[n].actual:
                    ladder.append(v)
                self.ladders[n] = ladder
        self.next_unit = len(units)
        self._note_peak()
        t2 = perf_counter()
        events = self._detect_events(len(units) - 1)
        self.clock.add_instance(t1 - t0, t2 - t1, perf_counter() - t2)
        return events

    def _new_ladder(self) -> MultiScaleSeries:
        lam, levels, window_len = self._ladder_args
        return MultiScaleSeries(lam, levels, window_len, self.params.alpha)

    # ------------------------------------------------------------------- step

    def step(self, counts: Mapping[int, int], emit_events: bool = True) -> list[AnomalyEvent]:
        """Consume one timeunit of leaf counts and adapt in place."""
        unit = self.next_unit
        t0 = perf_counter()
        self._update_weights(counts)
        t1 = perf_counter()
        touched = self._adapt(unit)
        self._append_all(unit, touched)
        t2 = perf_counter()
        events = self._detect_events(unit) if emit_events else []
        self.next_unit = unit + 1
        self._note_peak()
        self.clock.add_instance(t1 - t0, t2 - t1, perf_counter() - t2)
        return events

    def _update_weights(self, counts: Mapping[int, int]) -> None:
        self.washh[:] = self.ishh
        self.weight[:] = 0.0
        self.tosplit[:] = False
        self.raw = accumulate(self.schema, counts)
        for leaf, c in counts.items():
            self.weight[leaf] = c
        update_ishh_and_weight(self.schema, self.weight, self.ishh, self.theta)
        mark_tosplit(self.schema, self.ishh, self.tosplit, self.members)

    def _adapt(self, unit: int) -> dict[int, TrackedSeries | None]:
        touched: dict[int, TrackedSeries | None] = {}
        for n in self.schema.top_down:
            if self.tosplit[n] and (n in self.members or n == ROOT):
                self._split(n, touched)
        for n in self.schema.bottom_up:
            if n != ROOT and n in self.members and not self.ishh[n]:
                self._merge(n, touched)
        if self.weight[ROOT] >= self.theta:
            self.members.add(ROOT)
        else:
            self.members.discard(ROOT)
        if ROOT not in self.series:
            # every child took its own series; the residual left here is zero
            zeros = [0.0] * self.params.window_len
            self.series[ROOT] = TrackedSeries.from_history(
                zeros, self.params, unit - self.params.window_len
            )
        self._apply_references(touched)
        return touched

    def _split(self, node: int, touched: dict) -> None:
        """Hand the node's series down to its non-member children by ratio.

        The eligibility test uses raw subtree weights: a new heavy hitter deep
        below keeps every child's residual small, but inflates raw weights all
        the way up, so raw is the signal that series must flow through here.
        """
        targets = [c for c in self.schema.children[node] if c not in self.members]
        if not any(self.raw[c] >= self.theta for c in targets):
            return
        ratios = self._ratios(targets)
        self._stash(touched, node)
        source = self.series.pop(node)
        self.members.discard(node)
        for child, ratio in zip(targets, ratios):
            self._stash(touched, child)
            self.series[child] = source.scaled(ratio)
            self.members.add(child)
            # replace the scaled guess right away where a reference exists, so
            # merges later in this instance fold exact series, not guesses
            self._correct_from_reference(child)

    def _ratios(self, targets: list[int]) -> np.ndarray:
        if self.rule.name == "uniform":
            xs = np.ones(len(targets))
        elif self.rule.name == "last_time_unit":
            xs = self.stat_last[targets]
        elif self.rule.name == "long_term_history":
            xs = self.stat_cum[targets]
        else:
            xs = self.stat_ewma[targets]
        total = xs.sum()
        if total <= 0.0:
            return np.full(len(targets), 1.0 / len(targets))
        return xs / total

    def _merge(self, node: int, touched: dict) -> None:
        """Fold the node and its sub-threshold member siblings into the parent."""
        parent = self.schema.parent[node]
        movers = [
            c
            for c in self.schema.children[parent]
            if c in self.members and self.weight[c] < self.theta
        ]
        self._stash(touched, parent)
        merged = self.series.get(parent)
        for c in movers:
            self._stash(touched, c)
            state = self.series.pop(c)
            self.members.discard(c)
            merged = state if merged is None else merged.plus(state)
        self.series[parent] = merged
        self.members.add(parent)

    def _stash(self, touched: dict, node: int) -> None:
        if node not in touched:
            state = self.series.get(node)
            touched[node] = state.snapshot() if state is not None else None

    def _correct_from_reference(self, node: int) -> bool:
        """Replace a node's series by its exact raw-weight residual when a
        reference exists: reference series minus the series of all current
        member descendants."""
        if not 1 <= self.schema.depth[node] <= self.ref_levels:
            return False
        base = np.fromiter(self.refs[node], dtype=float)
        for m in self.schema.descendants(node):
            if m in self.members:
                base -= np.fromiter(self.series[m].actual, dtype=float)
        self.series[node].replace_actual(base)
        return True

    def _apply_references(self, touched: dict) -> None:
        """Final correction sweep over every relocated node that survived the
        adaptation (merge targets in particular). Deepest first, so ancestors
        subtract corrected children."""
        candidates = [n for n in touched if n in self.members]
        candidates.sort(key=lambda n: self.schema.depth[n], reverse=True)
        for n in candidates:
            self._correct_from_reference(n)

    def _append_all(self, unit: int, touched: dict) -> None:
        for n in sorted(self.members | {ROOT}):
            state = self.series[n]
            stash = touched.get(n)
            if n not in touched:
                rebuild = False
            elif stash is not None and _history_equal(state.actual, stash.actual):
                # adaptation round-tripped to the identical history: keep the
                # original model rather than re-deriving it
                state.forecast = stash.forecast
                state.model = stash.model
                rebuild = False
            elif n == ROOT or self.schema.depth[n] <= self.ref_levels:
                rebuild = True
            else:
                rebuild = False  # keep the relocated model; linearity makes it consistent
            state.advance(self.weight[n], self.params, unit, rebuild)
        for m in self.ref_nodes:
            self.refs[m].append(self.raw[m])
        self._update_stats(self.raw)
        if self.ladders is not None:
            tracked = self.members | {ROOT}
            for gone in [n for n in self.ladders if n not in tracked]:
                del self.ladders[gone]
            for n in sorted(tracked):
                if n not in self.ladders:
                    self.ladders[n] = self._new_ladder()
                self.ladders[n].append(self.weight[n])

    def _update_stats(self, raw: np.ndarray) -> None:
        self.stat_last = raw.copy()
        self.stat_cum += raw
        self.stat_ewma = self._ewma_rate * raw + (1.0 - self._ewma_rate) * self.stat_ewma

    # -------------------------------------------------------------- reporting

    def _detect_events(self, unit: int) -> list[AnomalyEvent]:
        events = []
        for n in sorted(self.members):
            state = self.series[n]
            actual = state.actual[-1]
            forecast = state.forecast[-1]
            if detect(actual, forecast, self.rt, self.dt):
                events.append(
                    make_event(
                        self.schema.path_str(n),
                        self.unit0_time + unit * self.delta,
                        actual,
                        forecast,
                    )
                )
        return events

    def _note_peak(self) -> None:
        live = len(self.series) + len(self.refs)
        if self.ladders is not None:
            live += sum(l.levels for l in self.ladders.values())
        self.peak_series = max(self.peak_series, live)

    def tracked_actual(self, node: int) -> np.ndarray:
        return np.fromiter(self.series[node].actual, dtype=float)

    def unit_total(self) -> float:
        """Mass of the current unit as accounted by the member set."""
        total = sum(self.weight[n] for n in self.members)
        if ROOT not in self.members:
            total += self.weight[ROOT]
        return float(total)
