"""Tests for domain models."""

import pytest

from uav_mec_sim.models import Job, MatchingResult, OccupancyLedger, TaskStatus, TimeGrid, TradeOutcome


def test_time_grid_epochs():
    """Test slot to epoch bookkeeping."""
    grid = TimeGrid(slot_duration_s=0.1, slots_per_epoch=10, total_slots=600)

    assert grid.epoch_count == 60
    assert grid.epoch_duration_s == pytest.approx(1.0)
    assert grid.horizon_s == pytest.approx(60.0)
    assert grid.epoch_of(0) == 0
    assert grid.epoch_of(9) == 0
    assert grid.epoch_of(10) == 1
    assert grid.epoch_of(599) == 59
    assert grid.is_epoch_end(9)
    assert not grid.is_epoch_end(10)
    with pytest.raises(ValueError):
        grid.epoch_of(600)


def test_time_grid_slots_for():
    """Test durations round up to whole slots, at least one."""
    grid = TimeGrid(slot_duration_s=0.1, slots_per_epoch=10, total_slots=100)

    assert grid.slots_for(0.0) == 1
    assert grid.slots_for(0.1) == 1
    assert grid.slots_for(0.25) == 3
    assert grid.slots_for(0.3) == 3


def test_mobile_device_single_core(make_md):
    """Test devices have exactly one core and track idleness."""
    md = make_md(busy_until=5)
    assert not md.is_idle(4)
    assert md.is_idle(5)
    with pytest.raises(ValueError):
        make_md(n_core=2)
    with pytest.raises(ValueError):
        make_md(weight=1.5)


def test_server_commit_respects_capacity(make_server):
    """Test the ledger refuses to overbook cores or frequency."""
    server = make_server(n_core=2, f_core_max=1e10, f_total_max=1.5e10)

    server.commit(Job(task_id=1, frequency=1e10, start_slot=0, release_slot=3))
    assert server.idle_cores(0) == 1
    assert server.available_frequency(0) == pytest.approx(5e9)

    with pytest.raises(ValueError):
        server.commit(Job(task_id=2, frequency=6e9, start_slot=1, release_slot=2))

    server.commit(Job(task_id=3, frequency=5e9, start_slot=1, release_slot=2))
    assert server.idle_cores(1) == 0
    with pytest.raises(ValueError):
        server.commit(Job(task_id=4, frequency=1.0, start_slot=1, release_slot=2))

    assert server.idle_cores(3) == 2
    assert server.available_frequency(3) == pytest.approx(1e10)


def test_ledger_release():
    """Test released jobs leave the ledger."""
    ledger = OccupancyLedger(jobs=[Job(task_id=1, frequency=1.0, start_slot=0, release_slot=2)])

    assert ledger.release(1) == []
    assert len(ledger.release(2)) == 1
    assert ledger.jobs == []


def test_job_spans_a_slot():
    """Test a job must occupy at least one slot."""
    with pytest.raises(ValueError):
        Job(task_id=1, frequency=1.0, start_slot=3, release_slot=3)


def test_task_lifecycle(make_task):
    """Test tasks only move forward through their lifecycle."""
    task = make_task()
    assert task.total_cycles == pytest.approx(2e9)
    assert task.elapsed_s(4, 0.1) == pytest.approx(0.4)

    task.transition(TaskStatus.OFFLOADED)
    task.transition(TaskStatus.COMPLETED)
    with pytest.raises(ValueError):
        task.transition(TaskStatus.FAILED)

    other = make_task(id=1)
    with pytest.raises(ValueError):
        other.transition(TaskStatus.COMPLETED)


def test_task_validation(make_task):
    """Test task fields must be positive."""
    with pytest.raises(ValueError):
        make_task(size_bits=0.0)
    with pytest.raises(ValueError):
        make_task(deadline_s=-1.0)


def test_trade_outcome_payment():
    """Test the payment is allocation times unit price."""
    trade = TradeOutcome(f_alloc=5e9, p_unit=4e-10, utility_md=0.3, utility_server=0.1)
    assert trade.payment == pytest.approx(2.0)


def test_matching_result_lookup():
    """Test server lookups on a matching."""
    result = MatchingResult(assignment={1: 0, 2: None})
    assert result.server_of(1) == 0
    assert result.server_of(2) is None
    assert result.server_of(3) is None
    assert result.stable
