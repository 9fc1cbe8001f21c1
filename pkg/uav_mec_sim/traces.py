"""
Run Trace Module.

Record keeping for one simulation run and the CSV tables written from it. Rows are collected
as plain dicts while the run loop executes and turned into pandas frames at the end. Slots and
epochs are written 1-based; every table has a header row.

Tables:
- metrics.csv: slot, system_utility, processing_rate, completion_delay, completion_ratio
- events.csv: one row per task lifecycle event
- trajectories.csv: UAV and device positions after every epoch
- sca.csv: SCA iterations per epoch (iteration, objective, kkt_residual)
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from uav_mec_sim.metrics import MetricsReport
from uav_mec_sim.models import SlotDecision, Task

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["slot", "system_utility", "processing_rate", "completion_delay", "completion_ratio"]
EVENT_COLUMNS = [
    "slot", "event", "task_id", "md_id", "server_id", "f_alloc", "p_unit", "payment",
    "delay_s", "utility_md", "utility_server",
]
TRAJECTORY_COLUMNS = ["epoch", "kind", "id", "x", "y"]
SCA_COLUMNS = ["epoch", "iteration", "objective", "kkt_residual"]
FLOAT_FORMAT = "%.17g"


@dataclass
class RunTraces:
    metrics: list[dict[str, Any]] = field(default_factory=list)
    events: list[dict[str, Any]] = field(default_factory=list)
    trajectories: list[dict[str, Any]] = field(default_factory=list)
    sca: list[dict[str, Any]] = field(default_factory=list)

    def record_metrics(self, slot: int, report: MetricsReport) -> None:
        self.metrics.append(
            {
                "slot": slot + 1,
                "system_utility": report.system_utility,
                "processing_rate": report.processing_rate,
                "completion_delay": report.completion_delay,
                "completion_ratio": report.completion_ratio,
            }
        )

    def record_event(self, slot: int, event: str, task: Task, decision: Optional[SlotDecision] = None) -> None:
        trade = decision.trade if decision is not None else None
        self.events.append(
            {
                "slot": slot + 1,
                "event": event,
                "task_id": task.id,
                "md_id": task.md_id,
                "server_id": decision.server_id if decision is not None else None,
                "f_alloc": trade.f_alloc if trade is not None else None,
                "p_unit": trade.p_unit if trade is not None else None,
                "payment": trade.payment if trade is not None else None,
                "delay_s": decision.delay_s if decision is not None else None,
                "utility_md": decision.utility_md if decision is not None else None,
                "utility_server": decision.utility_server if decision is not None else None,
            }
        )

    def record_positions(self, epoch: int, kind: str, ids: list[int], positions: np.ndarray) -> None:
        for node_id, (x, y) in zip(ids, np.asarray(positions, dtype=float).reshape(-1, 2)):
            self.trajectories.append({"epoch": epoch, "kind": kind, "id": node_id, "x": float(x), "y": float(y)})

    def record_sca(self, epoch: int, history: list[float], kkt_residual: float) -> None:
        for iteration, objective in enumerate(history):
            self.sca.append(
                {"epoch": epoch + 1, "iteration": iteration, "objective": objective, "kkt_residual": kkt_residual}
            )


def to_frame(rows: list[dict[str, Any]], columns: list[str]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=columns)


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_run_traces(traces: RunTraces, directory: Path) -> list[Path]:
    """Write every table of one run under ``directory``."""
    try:
        return [
            write_frame(to_frame(traces.metrics, METRIC_COLUMNS), directory / "metrics.csv"),
            write_frame(to_frame(traces.events, EVENT_COLUMNS), directory / "events.csv"),
            write_frame(to_frame(traces.trajectories, TRAJECTORY_COLUMNS), directory / "trajectories.csv"),
            write_frame(to_frame(traces.sca, SCA_COLUMNS), directory / "sca.csv"),
        ]
    except OSError as e:
        logger.error(f"Error writing run traces to {directory}: {e}")
        raise
