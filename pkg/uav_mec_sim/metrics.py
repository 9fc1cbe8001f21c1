"""
Metrics Module.

Accumulates the four run indicators: cumulative system utility, average processing rate
(cycles of successful tasks per second of simulated time), average completion delay and
completion ratio.
"""

import math
from dataclasses import dataclass, field

from pydantic import BaseModel, Field

from uav_mec_sim.models import Task


class MetricsReport(BaseModel):
    """Final indicators of one run."""

    system_utility: float
    processing_rate: float = Field(..., ge=0)
    completion_delay: float = Field(..., description="Mean completion delay (s); NaN when nothing completed")
    completion_ratio: float = Field(..., ge=0, le=1)
    generated: int = Field(..., ge=0)
    completed: int = Field(..., ge=0)
    failed: int = Field(..., ge=0)


@dataclass
class MetricsAccumulator:
    system_utility: float = 0.0
    completed_cycles: float = 0.0
    delays: list[float] = field(default_factory=list)
    generated: int = 0
    completed: int = 0
    failed: int = 0
    slot_utilities: list[float] = field(default_factory=list)

    def record_generated(self, count: int) -> None:
        self.generated += count

    def record_slot_utility(self, utility: float) -> None:
        self.slot_utilities.append(utility)
        self.system_utility += utility

    def record_completion(self, task: Task, slot_duration_s: float) -> None:
        """Count a completed task; its delay runs from generation to the end of its last slot."""
        delay = task.completion_delay_s(slot_duration_s)
        if delay is None:
            raise ValueError(f"Task {task.id} completed without a finishing slot")
        self.completed += 1
        self.completed_cycles += task.total_cycles
        self.delays.append(delay)

    def record_failure(self) -> None:
        self.failed += 1

    def snapshot(self, elapsed_s: float) -> MetricsReport:
        return metrics(self, elapsed_s)


def metrics(accumulator: MetricsAccumulator, horizon_s: float) -> MetricsReport:
    """Indicators over ``horizon_s`` seconds of simulated time."""
    if horizon_s <= 0:
        raise ValueError("Horizon must be positive")
    acc = accumulator
    delay = math.fsum(acc.delays) / len(acc.delays) if acc.delays else math.nan
    ratio = acc.completed / acc.generated if acc.generated else 1.0
    return MetricsReport(
        system_utility=acc.system_utility,
        processing_rate=acc.completed_cycles / horizon_s,
        completion_delay=delay,
        completion_ratio=min(1.0, ratio),
        generated=acc.generated,
        completed=acc.completed,
        failed=acc.failed,
    )
