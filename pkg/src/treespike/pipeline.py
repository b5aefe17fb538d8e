"""Drivers tying the pieces together: the window-rescanning baseline detector,
stream preparation, full runs of either algorithm, and the side-by-side
comparison harness."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import islice
from time import perf_counter
from typing import Mapping, Sequence

import numpy as np

from .ada import ROOT, AdaDetector, SplitRule
from .detect import AnomalyEvent, detect, drop_redundant, make_event, score_vs_oracle
from .domain import ConfigError, DetectorConfig, HierarchySchema, Record, validate_config
from .forecast import HwParams, TrackedSeries
from .hierarchy import compute_shhh, residual_pass
from .timing import StageClock
from .windowing import Window, bucket


class InsufficientBootstrap(ValueError):
    """The stream is shorter than one full window of timeunits."""


class StaDetector:
    """The exact baseline: retains every timeunit in the window and rebuilds
    each member's residual series from scratch every instance. Forecast models
    persist across instances for members whose history is a pure slide of the
    previous one; anything else is re-derived from the fresh series."""

    def __init__(
        self,
        schema: HierarchySchema,
        params: HwParams,
        *,
        theta: float,
        rt: float,
        dt: float,
        unit0_time: int = 0,
        delta: int = 1,
    ):
        self.schema = schema
        self.params = params
        self.theta = theta
        self.rt = rt
        self.dt = dt
        self.unit0_time = unit0_time
        self.delta = delta
        self.units: deque[Mapping[int, int]] = deque(maxlen=params.window_len)
        self.members: set[int] = set()
        self.states: dict[int, TrackedSeries] = {}
        self.next_unit = 0
        self.peak_series = 0
        self.clock = StageClock()

    def bootstrap(self, units: Sequence[Mapping[int, int]]) -> list[AnomalyEvent]:
        if len(units) != self.params.window_len:
            raise ValueError(
                f"bootstrap needs exactly {self.params.window_len} timeunits"
            )
        self.units.extend(units)
        self.next_unit = len(units) - 1
        return self._instance()

    def step(self, counts: Mapping[int, int], emit_events: bool = True) -> list[AnomalyEvent]:
        self.units.append(counts)
        self.next_unit += 1
        return self._instance(emit_events)

    def _instance(self, emit_events: bool = True) -> list[AnomalyEvent]:
        unit = self.next_unit
        window_start = unit - len(self.units) + 1
        t0 = perf_counter()
        members, _ = compute_shhh(self.schema, self.units[-1], self.theta)
        t1 = perf_counter()
        tracked = sorted(members | {ROOT})
        fresh = {n: np.empty(len(self.units)) for n in tracked}
        for i, counts in enumerate(self.units):
            value = residual_pass(self.schema, counts, members)
            for n in tracked:
                fresh[n][i] = value[n]
        self.members = members
        next_states: dict[int, TrackedSeries] = {}
        for n in tracked:
            prev = self.states.get(n)
            if prev is not None and self._pure_slide(fresh[n], prev):
                prev.advance(fresh[n][-1], self.params, unit, rebuild=False)
                next_states[n] = prev
            else:
                next_states[n] = TrackedSeries.from_history(
                    fresh[n], self.params, window_start
                )
        self.states = next_states
        self.peak_series = max(self.peak_series, len(self.states))
        t2 = perf_counter()
        events = []
        if emit_events:
            for n in sorted(members):
                state = self.states[n]
                actual, forecast = state.actual[-1], state.forecast[-1]
                if detect(actual, forecast, self.rt, self.dt):
                    events.append(
                        make_event(
                            self.schema.path_str(n),
                            self.unit0_time + unit * self.delta,
                            actual,
                            forecast,
                        )
                    )
        self.clock.add_instance(t1 - t0, t2 - t1, perf_counter() - t2)
        return events

    @staticmethod
    def _pure_slide(fresh: np.ndarray, prev: TrackedSeries) -> bool:
        """True when the fresh series is the previous one shifted by one unit,
        i.e. the member's history was not rewritten by membership changes."""
        return all(
            x == y for x, y in zip(fresh[:-1], islice(prev.actual, 1, None))
        )

    def tracked_actual(self, node: int) -> np.ndarray:
        return np.fromiter(self.states[node].actual, dtype=float)


# ---------------------------------------------------------------- preparation


@dataclass(frozen=True)
class ExecSpec:
    """Concrete execution granularity after resolving the window shift.

    A shift that is a multiple of the timeunit advances several units per
    instance (detection on the last). A shift that divides the timeunit
    re-expresses the run at the finer granularity and attaches per-node series
    ladders whose second scale restores the original timeunit.
    """

    base_delta: int
    units_per_instance: int
    window_len: int
    periods_units: tuple[int, ...]
    ladder_lam: int = 0
    ladder_levels: int = 0


def resolve_exec(cfg: DetectorConfig) -> ExecSpec:
    problems = validate_config(cfg)
    if problems:
        raise ConfigError(problems)
    if cfg.shift >= cfg.delta:
        return ExecSpec(
            base_delta=cfg.delta,
            units_per_instance=cfg.shift // cfg.delta,
            window_len=cfg.window_len,
            periods_units=tuple(p // cfg.delta for p in cfg.periods),
        )
    factor = cfg.delta // cfg.shift
    return ExecSpec(
        base_delta=cfg.shift,
        units_per_instance=1,
        window_len=cfg.window_len * factor,
        periods_units=tuple(p // cfg.shift for p in cfg.periods),
        ladder_lam=factor,
        ladder_levels=max(cfg.eta, 2),
    )


def unitize(
    schema: HierarchySchema, records: Sequence[Record], delta: int
) -> tuple[int, list[dict[int, int]]]:
    """Group records into contiguous timeunits; returns (start time, counts per unit)."""
    if not records:
        raise InsufficientBootstrap("stream contains no records")
    lo = min(r.timestamp for r in records)
    hi = max(r.timestamp for r in records)
    start = (lo // delta) * delta
    length = (hi - start) // delta + 1
    window = Window(start=start, delta=delta, length=length)
    sparse = bucket(window, records, schema)
    units = [sparse.get(i, {}) for i in range(length)]
    return start, units


def build_detector(
    algo: str,
    schema: HierarchySchema,
    cfg: DetectorConfig,
    spec: ExecSpec,
    unit0_time: int,
):
    params = HwParams.build(
        cfg.alpha, cfg.beta, cfg.gamma, spec.periods_units, cfg.xi, spec.window_len
    )
    if algo == "sta":
        return StaDetector(
            schema,
            params,
            theta=cfg.theta,
            rt=cfg.rt,
            dt=cfg.dt,
            unit0_time=unit0_time,
            delta=spec.base_delta,
        )
    if algo == "ada":
        return AdaDetector(
            schema,
            params,
            theta=cfg.theta,
            rt=cfg.rt,
            dt=cfg.dt,
            split_rule=SplitRule.parse(cfg.split_rule),
            ref_levels=cfg.ref_levels,
            unit0_time=unit0_time,
            delta=spec.base_delta,
            ladder_lam=spec.ladder_lam,
            ladder_levels=spec.ladder_levels,
        )
    raise ValueError(f"unknown algorithm {algo!r}")


# ----------------------------------------------------------------------- runs


@dataclass
class RunResult:
    algo: str
    events: list[AnomalyEvent]
    member_units: list[tuple[int, str]]
    negatives: list[tuple[int, str]]
    clock: StageClock
    peak_series: int
    instances: int
    member_trace: list[tuple[int, tuple[str, ...]]] = field(default_factory=list)


def run_detector(
    algo: str,
    schema: HierarchySchema,
    units: Sequence[Mapping[int, int]],
    unit0_time: int,
    cfg: DetectorConfig,
    *,
    max_instances: int | None = None,
    trace: bool = False,
) -> RunResult:
    """Run one algorithm over the unitized stream; one instance per window shift."""
    spec = resolve_exec(cfg)
    if len(units) < spec.window_len:
        raise InsufficientBootstrap(
            f"insufficient bootstrap history: stream has {len(units)} timeunits, "
            f"window needs {spec.window_len}"
        )
    det = build_detector(algo, schema, cfg, spec, unit0_time)
    raw_events: list[AnomalyEvent] = []
    member_units: list[tuple[int, str]] = []
    negatives: list[tuple[int, str]] = []
    trace_rows: list[tuple[int, tuple[str, ...]]] = []
    instances = 0

    def after_instance(events: list[AnomalyEvent], unit: int) -> None:
        raw_events.extend(events)
        flagged = {e.path for e in events}
        unit_time = unit0_time + unit * spec.base_delta
        for n in sorted(det.members):
            p = schema.path_str(n)
            member_units.append((unit_time, p))
            if p not in flagged:
                negatives.append((unit_time, p))
        if trace:
            trace_rows.append(
                (unit_time, tuple(schema.path_str(n) for n in sorted(det.members)))
            )

    events = det.bootstrap(units[: spec.window_len])
    after_instance(events, spec.window_len - 1)
    instances += 1
    pos = spec.window_len
    k = spec.units_per_instance
    while pos + k <= len(units):
        if max_instances is not None and instances >= max_instances:
            break
        for j in range(k):
            events = det.step(units[pos + j], emit_events=(j == k - 1))
        after_instance(events, pos + k - 1)
        instances += 1
        pos += k
    return RunResult(
        algo=algo,
        events=drop_redundant(raw_events),
        member_units=member_units,
        negatives=negatives,
        clock=det.clock,
        peak_series=det.peak_series,
        instances=instances,
        member_trace=trace_rows,
    )


@dataclass
class CompareResult:
    ada: RunResult
    sta: RunResult
    member_mismatches: int
    mean_abs_series_error: float
    accuracy: float
    precision: float
    recall: float


def compare_runs(
    schema: HierarchySchema,
    units: Sequence[Mapping[int, int]],
    unit0_time: int,
    cfg: DetectorConfig,
    *,
    max_instances: int | None = None,
    series_error: bool = True,
) -> CompareResult:
    """Run both algorithms sequentially on the same stream and score the
    adaptive one against the exact baseline."""
    ada = run_detector("ada", schema, units, unit0_time, cfg, max_instances=max_instances)
    sta = run_detector("sta", schema, units, unit0_time, cfg, max_instances=max_instances)
    mismatches, err = _series_divergence(schema, units, unit0_time, cfg, max_instances) \
        if series_error else (0, float("nan"))
    accuracy, precision, recall = score_vs_oracle(
        (e.key for e in ada.events),
        (e.key for e in sta.events),
        sta.negatives,
    )
    return CompareResult(ada, sta, mismatches, err, accuracy, precision, recall)


def _series_divergence(schema, units, unit0_time, cfg, max_instances):
    """Lockstep pass collecting member-set mismatches and mean |ada - sta|
    over member series, instance by instance."""
    spec = resolve_exec(cfg)
    ada = build_detector("ada", schema, cfg, spec, unit0_time)
    sta = build_detector("sta", schema, cfg, spec, unit0_time)
    ada.bootstrap(units[: spec.window_len])
    sta.bootstrap(units[: spec.window_len])
    mismatches = 0
    errors = []

    def measure():
        nonlocal mismatches
        if ada.members != sta.members:
            mismatches += 1
            return
        for n in sorted(ada.members):
            diff = np.abs(ada.tracked_actual(n) - sta.tracked_actual(n))
            errors.append(float(diff.mean()))

    measure()
    instances = 1
    pos = spec.window_len
    k = spec.units_per_instance
    while pos + k <= len(units):
        if max_instances is not None and instances >= max_instances:
            break
        for j in range(k):
            ada.step(units[pos + j], emit_events=(j == k - 1))
            sta.step(units[pos + j], emit_events=(j == k - 1))
        measure()
        instances += 1
        pos += k
    return mismatches, (float(np.mean(errors)) if errors else 0.0)
