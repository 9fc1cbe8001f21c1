"""Tests for run metrics and trace tables."""

import math

import pandas as pd
import pytest

from uav_mec_sim.metrics import MetricsAccumulator, metrics
from uav_mec_sim.models import DecisionMode, SlotDecision, TradeOutcome
from uav_mec_sim.traces import (
    EVENT_COLUMNS, METRIC_COLUMNS, SCA_COLUMNS, TRAJECTORY_COLUMNS, RunTraces, write_run_traces,
)


def test_empty_run_metrics():
    """Test a run without tasks has no delay and a full completion ratio."""
    report = metrics(MetricsAccumulator(), 60.0)
    assert report.system_utility == 0.0
    assert report.processing_rate == 0.0
    assert math.isnan(report.completion_delay)
    assert report.completion_ratio == 1.0


def test_metrics_accumulate(make_task):
    """Test utility, processing rate, delay and ratio."""
    acc = MetricsAccumulator()
    acc.record_generated(4)
    acc.record_slot_utility(0.5)
    acc.record_slot_utility(-0.2)
    acc.record_completion(make_task(generation_slot=0, finish_slot=4, delay_s=0.42), 0.1)
    acc.record_completion(make_task(id=1, generation_slot=2, finish_slot=16, delay_s=1.31), 0.1)
    acc.record_failure()

    report = metrics(acc, 10.0)
    assert report.system_utility == pytest.approx(0.3)
    assert report.processing_rate == pytest.approx(2 * 2e9 / 10.0)
    assert report.completion_delay == pytest.approx(1.0)
    assert report.completion_ratio == pytest.approx(0.5)
    assert (report.generated, report.completed, report.failed) == (4, 2, 1)
    assert acc.snapshot(5.0).processing_rate == pytest.approx(2 * 2e9 / 5.0)

    with pytest.raises(ValueError):
        metrics(acc, 0.0)


def test_completion_delay_counts_whole_slots(make_task):
    """Test the delay spans generation to the end of the finishing slot."""
    task = make_task(generation_slot=3, finish_slot=7, delay_s=0.43)
    assert task.completion_delay_s(0.1) == pytest.approx(0.5)
    assert make_task().completion_delay_s(0.1) is None

    with pytest.raises(ValueError):
        MetricsAccumulator().record_completion(make_task(), 0.1)


def test_run_traces_tables(tmp_path, make_task):
    """Test every trace table is written with its header."""
    traces = RunTraces()
    acc = MetricsAccumulator()
    acc.record_generated(1)
    traces.record_metrics(0, metrics(acc, 0.1))
    task = make_task()
    trade = TradeOutcome(f_alloc=5e9, p_unit=5e-10, utility_md=0.4, utility_server=0.1)
    decision = SlotDecision(
        task_id=0, mode=DecisionMode.EDGE, server_id=1, trade=trade, delay_s=0.5, utility_md=0.4, utility_server=0.1
    )
    traces.record_event(0, "generated", task)
    traces.record_event(0, "offloaded", task, decision)
    traces.record_positions(1, "uav", [1, 2], [[10.0, 20.0], [30.0, 40.0]])
    traces.record_sca(0, [0.1, 0.2], 1e-7)

    paths = write_run_traces(traces, tmp_path / "run")
    assert [p.name for p in paths] == ["metrics.csv", "events.csv", "trajectories.csv", "sca.csv"]

    frames = {p.name: pd.read_csv(p) for p in paths}
    assert list(frames["metrics.csv"].columns) == METRIC_COLUMNS
    assert list(frames["events.csv"].columns) == EVENT_COLUMNS
    assert list(frames["trajectories.csv"].columns) == TRAJECTORY_COLUMNS
    assert list(frames["sca.csv"].columns) == SCA_COLUMNS
    assert frames["metrics.csv"]["slot"].tolist() == [1]
    assert frames["events.csv"]["payment"].iloc[1] == pytest.approx(2.5)
    assert frames["sca.csv"]["epoch"].tolist() == [1, 1]
    assert len(frames["trajectories.csv"]) == 2
