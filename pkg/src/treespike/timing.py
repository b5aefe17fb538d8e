"""Per-stage wall-clock accounting, one sample per detector instance."""

from __future__ import annotations

from dataclasses import dataclass, field

STAGE_NAMES = (
    "Reading Traces",
    "Updating Hierarchies",
    "Creating Time Series",
    "Detecting Anomalies",
)


@dataclass
class StageClock:
    """Monotonic per-instance stage durations in seconds."""

    reading: float = 0.0
    updating: list[float] = field(default_factory=list)
    creating: list[float] = field(default_factory=list)
    detecting: list[float] = field(default_factory=list)

    def add_instance(self, updating: float, creating: float, detecting: float) -> None:
        self.updating.append(updating)
        self.creating.append(creating)
        self.detecting.append(detecting)

    def totals(self) -> dict[str, float]:
        return {
            "Reading Traces": self.reading,
            "Updating Hierarchies": sum(self.updating),
            "Creating Time Series": sum(self.creating),
            "Detecting Anomalies": sum(self.detecting),
        }

    def total_excluding_reading(self) -> float:
        return sum(self.updating) + sum(self.creating) + sum(self.detecting)
