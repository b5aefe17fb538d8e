"""Additive Holt-Winters forecasting with one or two seasonal factor rings.

States update in constant time per observation. Every recurrence is affine in
the observed series with state-independent coefficients, so the forecast of a
sum of series equals the sum of their forecasts (given shared smoothing rates,
periods, and history window). Series relocation across the hierarchy relies on
that: a merged node's model is the elementwise sum of the merged models, a
split child's model is the parent's scaled by its ratio.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass
from typing import Deque, Sequence

import numpy as np


class InsufficientHistory(ValueError):
    """Not enough history to initialize the seasonal model (needs two full cycles)."""


@dataclass(frozen=True)
class HwParams:
    """Smoothing rates, seasonal periods (in timeunits), and their mixing weights."""

    alpha: float
    beta: float
    gamma: float
    periods: tuple[int, ...]
    weights: tuple[float, ...]
    window_len: int

    @classmethod
    def build(
        cls,
        alpha: float,
        beta: float,
        gamma: float,
        periods: Sequence[int],
        xi: float,
        window_len: int,
    ) -> "HwParams":
        periods = tuple(periods)
        weights = (1.0,) if len(periods) == 1 else (xi, 1.0 - xi)
        return cls(alpha, beta, gamma, periods, weights, window_len)

    @property
    def init_len(self) -> int:
        return 2 * max(self.periods)


class HoltWintersState:
    """Level, trend, and one seasonal ring per period, stepped by absolute timeunit.

    ``t_next`` is the absolute index of the unit the state will consume next;
    ring phases are absolute indices mod the period, which keeps states built
    at different instances phase-compatible for summation.
    """

    __slots__ = ("level", "trend", "rings", "params", "t_next")

    def __init__(
        self,
        level: float,
        trend: float,
        rings: list[np.ndarray],
        params: HwParams,
        t_next: int,
    ):
        self.level = level
        self.trend = trend
        self.rings = rings
        self.params = params
        self.t_next = t_next

    def _seasonal(self) -> float:
        p = self.params
        return sum(
            w * ring[self.t_next % u] for w, ring, u in zip(p.weights, self.rings, p.periods)
        )

    def predict(self) -> float:
        """Forecast for unit ``t_next``: level + trend + mixed seasonal factor."""
        return self.level + self.trend + self._seasonal()

    def update(self, value: float) -> None:
        """Consume the observation for unit ``t_next`` (constant time)."""
        p = self.params
        seasonal = self._seasonal()
        level = p.alpha * (value - seasonal) + (1.0 - p.alpha) * (self.level + self.trend)
        self.trend = p.beta * (level - self.level) + (1.0 - p.beta) * self.trend
        residual = value - level
        for ring, u in zip(self.rings, p.periods):
            phase = self.t_next % u
            ring[phase] = p.gamma * residual + (1.0 - p.gamma) * ring[phase]
        self.level = level
        self.t_next += 1

    def scaled(self, ratio: float) -> "HoltWintersState":
        return HoltWintersState(
            self.level * ratio,
            self.trend * ratio,
            [ring * ratio for ring in self.rings],
            self.params,
            self.t_next,
        )

    def plus(self, other: "HoltWintersState") -> "HoltWintersState":
        if self.params != other.params or self.t_next != other.t_next:
            raise ValueError("cannot sum models with different parameters or phases")
        return HoltWintersState(
            self.level + other.level,
            self.trend + other.trend,
            [a + b for a, b in zip(self.rings, other.rings)],
            self.params,
            self.t_next,
        )

    def clone(self) -> "HoltWintersState":
        return HoltWintersState(
            self.level, self.trend, [ring.copy() for ring in self.rings], self.params, self.t_next
        )


def hw_init(history: Sequence[float], params: HwParams, start_unit: int) -> HoltWintersState:
    """Initialize a state from at least two cycles of the longest period.

    Over the last 2*u_max values: level is their mean, trend is the most recent
    cycle's sum minus the preceding cycle's, divided by 2*u_max. Each seasonal
    ring takes value-minus-level residuals over its own last two cycles; the
    two residuals landing on the same phase are averaged.
    """
    values = np.asarray(history, dtype=float)
    u_max = max(params.periods)
    if len(values) < 2 * u_max:
        raise InsufficientHistory(
            f"need {2 * u_max} observations to initialize, got {len(values)}"
        )
    end_unit = start_unit + len(values)  # absolute index one past the last observation
    tail = values[-2 * u_max:]
    level = float(tail.mean())
    trend = (tail[u_max:].sum() - tail[:u_max].sum()) / (2.0 * u_max)
    rings = []
    for u in params.periods:
        ring = np.zeros(u)
        seen = np.zeros(u)
        for j in range(1, 2 * u + 1):
            phase = (end_unit - j) % u
            ring[phase] += values[-j] - level
            seen[phase] += 1
        ring /= seen
        rings.append(ring)
    return HoltWintersState(level, trend, rings, params, end_unit)


def build_by_replay(
    values: Sequence[float], params: HwParams, start_unit: int
) -> tuple[HoltWintersState, list[float]]:
    """Initialize on the first two cycles, then replay the rest step by step.

    Returns the end state plus one forecast per input unit. Units inside the
    initialization segment get their own value as a zero-error placeholder
    (keeping the pairing linear in the input, which summation relies on).
    """
    init_len = params.init_len
    if len(values) < init_len:
        raise InsufficientHistory(
            f"need {init_len} observations to initialize, got {len(values)}"
        )
    state = hw_init(values[:init_len], params, start_unit)
    forecasts = [float(v) for v in values[:init_len]]
    for v in values[init_len:]:
        forecasts.append(state.predict())
        state.update(float(v))
    return state, forecasts


class TrackedSeries:
    """A node's window of actual values, paired forecasts, and its live model."""

    __slots__ = ("actual", "forecast", "model")

    def __init__(
        self, actual: Deque[float], forecast: Deque[float], model: HoltWintersState
    ):
        self.actual = actual
        self.forecast = forecast
        self.model = model

    @classmethod
    def from_history(
        cls, values: Sequence[float], params: HwParams, start_unit: int
    ) -> "TrackedSeries":
        model, forecasts = build_by_replay(values, params, start_unit)
        n = params.window_len
        return cls(
            deque((float(v) for v in values), maxlen=n), deque(forecasts, maxlen=n), model
        )

    def scaled(self, ratio: float) -> "TrackedSeries":
        n = self.actual.maxlen
        return TrackedSeries(
            deque((v * ratio for v in self.actual), maxlen=n),
            deque((v * ratio for v in self.forecast), maxlen=n),
            self.model.scaled(ratio),
        )

    def plus(self, other: "TrackedSeries") -> "TrackedSeries":
        n = self.actual.maxlen
        return TrackedSeries(
            deque((a + b for a, b in zip(self.actual, other.actual)), maxlen=n),
            deque((a + b for a, b in zip(self.forecast, other.forecast)), maxlen=n),
            self.model.plus(other.model),
        )

    def snapshot(self) -> "TrackedSeries":
        return TrackedSeries(
            deque(self.actual, maxlen=self.actual.maxlen),
            deque(self.forecast, maxlen=self.forecast.maxlen),
            self.model.clone(),
        )

    def replace_actual(self, values: Sequence[float]) -> None:
        self.actual = deque((float(v) for v in values), maxlen=self.actual.maxlen)

    def advance(
        self, value: float, params: HwParams, unit_index: int, rebuild: bool
    ) -> None:
        """Append the detection unit's value and its forecast.

        The incremental path is constant time; the rebuild path re-derives the
        model from the appended window and is taken only when the node's
        history was rewritten by an adaptation (or the node is new).
        """
        if rebuild:
            self.actual.append(float(value))
            self.model, forecasts = build_by_replay(
                list(self.actual), params, unit_index - len(self.actual) + 1
            )
            self.forecast = deque(forecasts, maxlen=self.forecast.maxlen)
        else:
            g = self.model.predict()
            self.model.update(float(value))
            self.actual.append(float(value))
            self.forecast.append(g)


@dataclass
class EwmaState:
    """Exponentially weighted moving average forecast."""

    value: float
    alpha: float

    def update(self, observation: float) -> None:
        self.value = self.alpha * observation + (1.0 - self.alpha) * self.value


def ewma_update(state: EwmaState, observation: float) -> EwmaState:
    state.update(observation)
    return state


def hw_sum_property(
    states: Sequence[HoltWintersState],
    combined: HoltWintersState,
    observations: Sequence[Sequence[float]],
    rtol: float = 1e-9,
) -> bool:
    """Check that the combined model forecasts the sum of the component forecasts.

    ``observations[i]`` is the future of component i; the combined state
    consumes columnwise sums. All states must share parameters and phase
    (mismatched periods are a refused precondition, not a False result).
    """
    for s in states:
        if s.params != combined.params or s.t_next != combined.t_next:
            raise ValueError("states must share parameters, periods, and phase")
    steps = len(observations[0])
    if any(len(obs) != steps for obs in observations):
        raise ValueError("observation sequences must have equal length")
    work = [s.clone() for s in states]
    total = combined.clone()
    for j in range(steps):
        parts = sum(s.predict() for s in work)
        whole = total.predict()
        if abs(whole - parts) > rtol * max(1.0, abs(whole)):
            return False
        for s, obs in zip(work, observations):
            s.update(float(obs[j]))
        total.update(float(sum(obs[j] for obs in observations)))
    return True
