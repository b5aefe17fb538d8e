"""The spike rule on the detection unit, plus the evaluation comparators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

FORECAST_FLOOR = 1e-6


@dataclass(frozen=True)
class AnomalyEvent:
    """A flagged (node, timeunit) with the values that triggered it.

    ``forecast`` is the value the rule actually divided by (clamped to zero
    from below, since counts are non-negative); ratio and diff are derived
    from it.
    """

    path: str
    unit_start: int
    actual: float
    forecast: float
    ratio: float
    diff: float

    @property
    def key(self) -> tuple[int, str]:
        return (self.unit_start, self.path)


def detect(actual: float, forecast: float, rt: float, dt: float) -> bool:
    """True iff the actual exceeds the forecast both relatively and absolutely.

    The two gates together suppress false alarms at daily peaks (relative) and
    dips (absolute). The forecast is floored at a small positive value before
    dividing; sparse nodes legitimately forecast zero.
    """
    clamped = max(forecast, 0.0)
    ratio = actual / max(clamped, FORECAST_FLOOR)
    return ratio > rt and (actual - clamped) > dt


def make_event(path: str, unit_start: int, actual: float, forecast: float) -> AnomalyEvent:
    clamped = max(forecast, 0.0)
    return AnomalyEvent(
        path=path,
        unit_start=unit_start,
        actual=actual,
        forecast=clamped,
        ratio=actual / max(clamped, FORECAST_FLOOR),
        diff=actual - clamped,
    )


def _segments(path: str) -> tuple[str, ...]:
    return tuple(path.split("/"))


def is_ancestor_or_equal(ancestor: str, node: str) -> bool:
    a, n = _segments(ancestor), _segments(node)
    return len(a) <= len(n) and n[: len(a)] == a


def drop_redundant(events: Sequence[AnomalyEvent]) -> list[AnomalyEvent]:
    """Remove events that are ancestors of another event in the same timeunit."""
    by_unit: dict[int, list[AnomalyEvent]] = {}
    for e in events:
        by_unit.setdefault(e.unit_start, []).append(e)
    kept = []
    for unit_events in by_unit.values():
        for e in unit_events:
            redundant = any(
                o.path != e.path and is_ancestor_or_equal(e.path, o.path)
                for o in unit_events
            )
            if not redundant:
                kept.append(e)
    kept.sort(key=lambda e: e.key)
    return kept


def score_vs_oracle(
    flagged: Iterable[tuple[int, str]],
    oracle_flagged: Iterable[tuple[int, str]],
    negatives: Iterable[tuple[int, str]],
) -> tuple[float, float, float]:
    """Accuracy, precision, recall of flagged (unit, path) keys against the
    exact baseline's keys; negatives are tracked unit-node pairs the baseline
    did not flag."""
    ours = set(flagged)
    truth = set(oracle_flagged)
    neg = set(negatives) - truth
    tp = len(ours & truth)
    fp = len(ours - truth)
    fn = len(truth - ours)
    tn = len(neg - ours)
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total if total else 1.0
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return accuracy, precision, recall


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome counts against an external reference anomaly set.

    A reference anomaly is a true alarm when some detected event in the same
    timeunit sits at or below its location (detection refines the location);
    otherwise it is missed. Detected events unrelated to every reference
    anomaly are new anomalies; unflagged tracked nodes unrelated to every
    reference anomaly are true negatives.
    """

    true_alarms: int
    missed: int
    new_anomalies: int
    true_negatives: int

    @property
    def type1(self) -> float:
        total = self.true_alarms + self.missed + self.new_anomalies + self.true_negatives
        return (self.true_alarms + self.true_negatives) / total if total else 1.0

    @property
    def type2(self) -> float:
        denom = self.true_alarms + self.missed
        return self.true_alarms / denom if denom else 1.0

    @property
    def type3(self) -> float:
        denom = self.true_negatives + self.new_anomalies
        return self.true_negatives / denom if denom else 1.0


def compare_with_reference(
    detected: Iterable[tuple[int, str]],
    reference: Iterable[tuple[int, str]],
    not_flagged: Iterable[tuple[int, str]] = (),
) -> ComparisonReport:
    """Match detected (unit, path) keys against reference anomalies."""
    detected = set(detected)
    reference = set(reference)
    not_flagged = set(not_flagged)

    def related(unit: int, path: str) -> bool:
        return any(
            r_unit == unit and is_ancestor_or_equal(r_path, path)
            for r_unit, r_path in reference
        )

    ta = sum(
        1
        for r_unit, r_path in reference
        if any(
            d_unit == r_unit and is_ancestor_or_equal(r_path, d_path)
            for d_unit, d_path in detected
        )
    )
    ma = len(reference) - ta
    na = sum(1 for unit, path in detected if not related(unit, path))
    tn = sum(1 for unit, path in not_flagged if not related(unit, path))
    return ComparisonReport(ta, ma, na, tn)
