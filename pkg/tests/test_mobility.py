"""Tests for device mobility and UAV kinematic checks."""

import numpy as np
import pytest

from uav_mec_sim.mobility import (
    GaussMarkovParams, UavKinematicLimits, check_uav_constraints, md_position_step, md_velocity_step,
    predicted_position, uav_position_step,
)
from uav_mec_sim.models import TimeGrid

GRID = TimeGrid(slot_duration_s=0.1, slots_per_epoch=10, total_slots=40)


def _limits(**overrides) -> UavKinematicLimits:
    fields = dict(
        v_max=30.0, d_safe=10.0, altitude=100.0,
        initial=[(100.0, 100.0), (300.0, 300.0)], final=[(100.0, 100.0), (300.0, 300.0)],
        area=(1000.0, 1000.0),
    )
    fields.update(overrides)
    return UavKinematicLimits(**fields)


def test_velocity_step_extremes():
    """Test full memory keeps the velocity and zero memory returns the mean."""
    rng = np.random.default_rng(0)
    keep = GaussMarkovParams(memory=1.0, mean_velocity=(0.0, 0.0), asymptotic_std=2.0)
    np.testing.assert_allclose(md_velocity_step((1.5, -0.5), keep, rng), [1.5, -0.5])

    reset = GaussMarkovParams(memory=0.0, mean_velocity=(0.3, 0.4), asymptotic_std=0.0)
    np.testing.assert_allclose(md_velocity_step((5.0, 5.0), reset, rng), [0.3, 0.4])


def test_velocity_stationary_mean():
    """Test the long-run velocity mean converges to the asymptotic mean."""
    rng = np.random.default_rng(42)
    params = GaussMarkovParams(memory=0.5, mean_velocity=(1.0, -1.0), asymptotic_std=2.0)
    v = np.zeros(2)
    samples = []
    for _ in range(20000):
        v = md_velocity_step(v, params, rng)
        samples.append(v)
    mean = np.mean(samples[100:], axis=0)
    # autocorrelation 0.5 inflates the standard error by sqrt(3)
    stderr = 2.0 * np.sqrt(3.0) / np.sqrt(len(samples) - 100)
    assert np.all(np.abs(mean - np.array([1.0, -1.0])) < 4 * stderr)


def test_position_step_reflects_at_border():
    """Test positions are clamped to the area and the velocity component reversed."""
    q, v = md_position_step((999.5, 10.0), (2.0, -1.0), GRID, (1000.0, 1000.0))
    np.testing.assert_allclose(q, [1000.0, 9.0])
    np.testing.assert_allclose(v, [-2.0, -1.0])

    q, v = md_position_step((0.5, 0.5), (-1.0, -1.0), GRID, (1000.0, 1000.0))
    np.testing.assert_allclose(q, [0.0, 0.0])
    np.testing.assert_allclose(v, [1.0, 1.0])


def test_predicted_position_uses_mean_velocity():
    """Test the forecast moves by the expected velocity over one epoch."""
    params = GaussMarkovParams(memory=0.5, mean_velocity=(2.0, 0.0), asymptotic_std=3.0)
    q = predicted_position((100.0, 100.0), (0.0, 2.0), params, GRID, (1000.0, 1000.0))
    np.testing.assert_allclose(q, [101.0, 101.0])


def test_reach_radius_shrinks():
    """Test the allowed distance to the destination shrinks every epoch."""
    limits = _limits()
    assert limits.step_length(GRID) == pytest.approx(30.0)
    radii = [limits.reach_radius(k, GRID) for k in range(GRID.epoch_count + 1)]
    assert radii == sorted(radii, reverse=True)
    assert radii[-1] == pytest.approx(30.0)


def test_check_constraints_clean_trajectory():
    """Test a hovering pair raises no violations."""
    traj = np.tile(np.array([[100.0, 100.0], [300.0, 300.0]]), (GRID.epoch_count + 1, 1, 1))
    assert check_uav_constraints(traj, _limits(), GRID) == []


def test_check_constraints_detects_violations():
    """Test displacement, separation, bounds and anchor violations are reported."""
    traj = np.tile(np.array([[100.0, 100.0], [300.0, 300.0]]), (GRID.epoch_count + 1, 1, 1))
    traj[1, 0] = [150.0, 100.0]
    traj[2, 1] = [105.0, 100.0]
    traj[2, 0] = [100.0, 100.0]
    traj[3, 1] = [300.0, -5.0]
    kinds = {v.kind for v in check_uav_constraints(traj, _limits(), GRID)}
    assert {"displacement", "safe_distance", "bounds"} <= kinds

    moved = traj.copy()
    moved[0, 0] = [120.0, 100.0]
    kinds = {v.kind for v in check_uav_constraints(moved, _limits(), GRID)}
    assert "initial_anchor" in kinds


def test_check_constraints_final_anchor():
    """Test the destination must be within one step at the horizon."""
    limits = _limits(final=[(160.0, 100.0), (300.0, 300.0)])
    traj = np.tile(np.array([[100.0, 100.0], [300.0, 300.0]]), (GRID.epoch_count + 1, 1, 1))
    kinds = {v.kind for v in check_uav_constraints(traj, limits, GRID)}
    assert "final_anchor" in kinds
    assert "reachability" in kinds


def test_uav_position_step():
    """Test a UAV moves by its velocity over one epoch."""
    q = uav_position_step([[100.0, 100.0], [300.0, 300.0]], [[10.0, 0.0], [0.0, -5.0]], GRID)
    np.testing.assert_allclose(q, [[110.0, 100.0], [300.0, 295.0]])
