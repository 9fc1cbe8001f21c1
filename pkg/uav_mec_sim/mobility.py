"""Gauss-Markov device mobility and UAV kinematic checks."""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from uav_mec_sim.models import TimeGrid, Violation

logger = logging.getLogger(__name__)


class GaussMarkovParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    memory: float = Field(..., ge=0.0, le=1.0)
    mean_velocity: tuple[float, float]
    asymptotic_std: float = Field(..., ge=0.0)


class UavKinematicLimits(BaseModel):
    model_config = ConfigDict(frozen=True)

    v_max: float = Field(..., gt=0)
    d_safe: float = Field(..., gt=0)
    altitude: float = Field(..., gt=0)
    initial: list[tuple[float, float]]
    final: list[tuple[float, float]]
    area: tuple[float, float]
    reach_speed_fraction: float = Field(default=0.9, gt=0, le=1.0)

    def step_length(self, grid: TimeGrid) -> float:
        """Largest displacement in one epoch."""
        return self.v_max * grid.epoch_duration_s

    def reach_radius(self, epoch_row: int, grid: TimeGrid) -> float:
        """Allowed distance to the destination after ``epoch_row`` epochs."""
        step = self.step_length(grid)
        return self.reach_speed_fraction * step * (grid.epoch_count - epoch_row) + step


def md_velocity_step(v_prev, params: GaussMarkovParams, rng: np.random.Generator) -> np.ndarray:
    a = params.memory
    noise = rng.standard_normal(2)
    return (
        a * np.asarray(v_prev, dtype=float)
        + (1 - a) * np.asarray(params.mean_velocity, dtype=float)
        + params.asymptotic_std * math.sqrt(1 - a * a) * noise
    )


def md_position_step(q, v, grid: TimeGrid, area: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Advance one epoch; positions leaving the area are clamped and the velocity reflected."""
    q_next = np.asarray(q, dtype=float) + np.asarray(v, dtype=float) * grid.epoch_duration_s
    v_next = np.array(v, dtype=float)
    for axis, upper in enumerate(area):
        if q_next[axis] < 0.0:
            q_next[axis] = 0.0
            v_next[axis] = -v_next[axis]
        elif q_next[axis] > upper:
            q_next[axis] = upper
            v_next[axis] = -v_next[axis]
    return q_next, v_next


def predicted_position(q, v, params: GaussMarkovParams, grid: TimeGrid, area: tuple[float, float]) -> np.ndarray:
    """One-epoch point forecast using the mean of the velocity update."""
    a = params.memory
    v_mean = a * np.asarray(v, dtype=float) + (1 - a) * np.asarray(params.mean_velocity, dtype=float)
    q_next, _ = md_position_step(q, v_mean, grid, area)
    return q_next


def uav_position_step(q, v, grid: TimeGrid) -> np.ndarray:
    return np.asarray(q, dtype=float) + np.asarray(v, dtype=float) * grid.epoch_duration_s


def check_uav_constraints(
    trajectory: np.ndarray,
    limits: UavKinematicLimits,
    grid: TimeGrid,
    tolerance: float = 1e-6,
) -> list[Violation]:
    """Audit a (rows, uavs, 2) trajectory whose row k holds positions after k epochs.

    Row 0 must be the initial anchor. The final anchor is checked only when the last row
    reaches the horizon; it is met when within one epoch step of the destination.
    """
    traj = np.asarray(trajectory, dtype=float)
    violations: list[Violation] = []
    if traj.size == 0:
        return violations
    rows, count, _ = traj.shape
    step = limits.step_length(grid)
    x_max, y_max = limits.area

    for j in range(count):
        start_gap = float(np.linalg.norm(traj[0, j] - np.asarray(limits.initial[j])))
        if start_gap > tolerance:
            violations.append(Violation(kind="initial_anchor", uav_id=j, epoch=0, value=start_gap, limit=0.0))

    for k in range(rows):
        for j in range(count):
            x, y = traj[k, j]
            if x < -tolerance or y < -tolerance or x > x_max + tolerance or y > y_max + tolerance:
                violations.append(Violation(kind="bounds", uav_id=j, epoch=k, value=float(max(-x, -y, x - x_max, y - y_max)), limit=0.0))
            goal_gap = float(np.linalg.norm(traj[k, j] - np.asarray(limits.final[j])))
            radius = limits.reach_radius(k, grid)
            if goal_gap > radius + tolerance:
                violations.append(Violation(kind="reachability", uav_id=j, epoch=k, value=goal_gap, limit=radius))
            if k > 0:
                moved = float(np.linalg.norm(traj[k, j] - traj[k - 1, j]))
                if moved > step + tolerance:
                    violations.append(Violation(kind="displacement", uav_id=j, epoch=k, value=moved, limit=step))
        for a in range(count):
            for b in range(a + 1, count):
                gap = float(np.linalg.norm(traj[k, a] - traj[k, b]))
                if gap < limits.d_safe - tolerance:
                    violations.append(Violation(kind="safe_distance", uav_id=a, epoch=k, value=gap, limit=limits.d_safe))

    if rows - 1 == grid.epoch_count:
        for j in range(count):
            end_gap = float(np.linalg.norm(traj[-1, j] - np.asarray(limits.final[j])))
            if end_gap > step + tolerance:
                violations.append(Violation(kind="final_anchor", uav_id=j, epoch=rows - 1, value=end_gap, limit=step))

    if violations:
        logger.warning(f"UAV trajectory has {len(violations)} constraint violations")
    return violations
