"""End-to-end tests of the two-timescale run loop."""

import math
import os

import numpy as np
import pandas as pd
import pytest

from uav_mec_sim.cli import REPORT_COLUMNS, SweepSpec, build_plan, run_plan
from uav_mec_sim.config import ScenarioConfig, StrategyKind, apply_overrides
from uav_mec_sim.models import TaskStatus
from uav_mec_sim.simulation import Simulator, run

SLOW = os.getenv("UAV_MEC_SLOW_TESTS") == "1"


def _with_strategy(config: ScenarioConfig, kind: StrategyKind) -> ScenarioConfig:
    return apply_overrides(config, {"strategy.kind": kind.value})


def test_run_is_deterministic(small_config):
    """Test the same seed reproduces the same run."""
    a = run(small_config)
    b = run(small_config)

    assert a.report.model_dump_json() == b.report.model_dump_json()
    np.testing.assert_array_equal(a.trajectory, b.trajectory)
    assert a.traces.events == b.traces.events


def test_run_accounts_for_every_task(small_config):
    """Test every generated task ends completed or failed."""
    result = run(small_config)
    report = result.report

    assert report.generated > 0
    assert report.completed + report.failed == report.generated
    assert all(t.status in (TaskStatus.COMPLETED, TaskStatus.FAILED) for t in result.world.tasks.values())
    assert 0.0 <= report.completion_ratio <= 1.0
    assert len(result.traces.metrics) == small_config.time.total_slots
    assert result.trajectory.shape == (5, 2, 2)


def test_run_respects_uav_constraints(small_config):
    """Test SCA trajectories satisfy every kinematic constraint."""
    result = run(small_config)
    assert result.violations == []
    np.testing.assert_allclose(result.trajectory[0], [[200.0, 200.0], [800.0, 800.0]])


def test_segment_trajectories_respect_constraints(small_config):
    """Test segment flights reach their destinations within the limits."""
    result = run(_with_strategy(small_config, StrategyKind.STCS))
    assert result.violations == []
    finals = np.array([[300.0, 250.0], [700.0, 750.0]])
    assert np.all(np.linalg.norm(result.trajectory[-1] - finals, axis=1) <= 30.0 + 1e-9)


def test_completed_tasks_meet_deadlines_and_budgets(small_config):
    """Test completed tasks finished in time and trades stayed within budget."""
    result = run(small_config)
    world = result.world
    for task in world.tasks.values():
        if task.status == TaskStatus.COMPLETED:
            assert task.delay_s < task.deadline_s
        if task.trade is not None:
            assert task.trade.payment <= world.mds[task.md_id].payment_budget * (1 + 1e-9)
    for md in world.mds:
        assert result.payments[md.id] >= 0.0


def test_local_only_matches_a_world_without_servers(small_config):
    """Test LS equals the joint scheme when no server is available."""
    local = run(_with_strategy(small_config, StrategyKind.LS))
    serverless = run(apply_overrides(small_config, {"servers.include_mbs": False, "uavs.count": 0}))

    assert local.report.system_utility == pytest.approx(serverless.report.system_utility)
    assert local.report.completion_ratio == serverless.report.completion_ratio
    assert local.report.generated == serverless.report.generated
    assert all(t.server_id is None for t in local.world.tasks.values())
    assert sum(local.payments.values()) == 0.0


def test_strategies_share_arrivals(small_config):
    """Test common random numbers give every strategy the same tasks."""
    runs = {kind: run(_with_strategy(small_config, kind)) for kind in (StrategyKind.TJCCT, StrategyKind.GCOS)}
    generated = {
        kind: [(t.md_id, t.generation_slot, t.size_bits) for t in result.world.tasks.values()]
        for kind, result in runs.items()
    }
    assert generated[StrategyKind.TJCCT] == generated[StrategyKind.GCOS]


def test_occupancy_released_after_completion(small_config):
    """Test server ledgers hold no job past its release slot."""
    sim = Simulator(small_config)
    for slot in range(small_config.time.slots_per_epoch):
        sim.step_slot(slot)
        for server in sim.world.servers:
            assert all(job.release_slot > slot for job in server.ledger.jobs)
            assert server.idle_cores(slot) >= 0


def test_computation_size_scale(small_config):
    """Test larger tasks leave processing rate and ratio well defined."""
    result = run(apply_overrides(small_config, {"mds.task_size_scale": 2.0}))
    assert result.report.processing_rate >= 0.0
    assert math.isnan(result.report.completion_delay) or result.report.completion_delay > 0


@pytest.mark.skipif(not SLOW, reason="set UAV_MEC_SLOW_TESTS=1 to run the full comparison")
@pytest.mark.parametrize("kind", list(StrategyKind))
@pytest.mark.parametrize("seed", range(10))
def test_reference_scenario(kind, seed):
    """Test the reference deployment keeps every invariant for every strategy."""
    result = run(ScenarioConfig(seed=seed, strategy={"kind": kind}))
    assert result.violations == []
    assert result.report.completed + result.report.failed == result.report.generated
    for task in result.world.tasks.values():
        if task.trade is not None:
            assert task.trade.payment <= result.world.mds[task.md_id].payment_budget * (1 + 1e-9)


def test_trace_replay_matches_accumulated_utility(small_config):
    """Test per-slot utilities rebuilt from the event trace reproduce the cumulative metric."""
    result = run(small_config)
    per_slot = np.zeros(small_config.time.total_slots)
    for event in result.traces.events:
        if event["event"] == "offloaded":
            per_slot[event["slot"] - 1] += event["utility_md"] + event["utility_server"]
        elif event["event"] == "local":
            per_slot[event["slot"] - 1] += event["utility_md"]

    np.testing.assert_allclose(per_slot, result.accumulator.slot_utilities, rtol=1e-9, atol=1e-12)
    cumulative = [row["system_utility"] for row in result.traces.metrics]
    np.testing.assert_allclose(np.cumsum(per_slot), cumulative, rtol=1e-9, atol=1e-9)
    assert result.report.system_utility == pytest.approx(math.fsum(per_slot), rel=1e-9, abs=1e-9)


def test_trace_replay_respects_server_quotas(small_config):
    """Test cores and frequency rebuilt from the offload trace never exceed a server's capacity."""
    result = run(small_config)
    world = result.world
    horizon = small_config.time.total_slots
    cores = {s.id: np.zeros(horizon, dtype=int) for s in world.servers}
    frequency = {s.id: np.zeros(horizon) for s in world.servers}
    offloads = [e for e in result.traces.events if e["event"] == "offloaded"]
    assert offloads

    for event in offloads:
        task = world.tasks[event["task_id"]]
        assert task.start_slot == event["slot"] - 1
        busy = slice(task.start_slot, min(task.finish_slot + 1, horizon))
        cores[event["server_id"]][busy] += 1
        frequency[event["server_id"]][busy] += event["f_alloc"]

    for server in world.servers:
        assert cores[server.id].max() <= server.n_core
        assert frequency[server.id].max() <= server.f_total_max * (1 + 1e-9)

    paid = {md.id: 0.0 for md in world.mds}
    for event in offloads:
        paid[event["md_id"]] += event["payment"]
    for md in world.mds:
        assert result.payments[md.id] == pytest.approx(paid[md.id])


def test_completion_delay_replays_from_tasks(small_config):
    """Test the reported delay is the mean generation-to-completion time of completed tasks."""
    result = run(small_config)
    delta = small_config.time.slot_duration_s
    done = [t for t in result.world.tasks.values() if t.status == TaskStatus.COMPLETED]
    assert done
    expected = math.fsum(t.completion_delay_s(delta) for t in done) / len(done)
    assert result.report.completion_delay == pytest.approx(expected)
    assert all(t.completion_delay_s(delta) >= t.delay_s - 1e-6 for t in done)


def test_strategies_run_side_by_side(tmp_path, small_config):
    """Test a seeded multi-strategy plan shares arrivals and keeps local-only free of trades."""
    plan = build_plan(list(StrategyKind), [3, 4], tmp_path)
    summary = run_plan(small_config, plan)

    assert len(summary) == 2 * len(StrategyKind)
    assert summary.groupby("seed")["generated"].nunique().eq(1).all()
    assert summary["violations"].eq(0).all()
    local = summary[summary["strategy"] == "LS"]
    assert local["completion_ratio"].between(0.0, 1.0).all()
    events = pd.read_csv(tmp_path / "runs" / "LS-seed3" / "events.csv")
    assert not events["event"].eq("offloaded").any()


def _mean_report(summary: pd.DataFrame, by: str) -> pd.DataFrame:
    return summary.groupby(by)[REPORT_COLUMNS].mean()


@pytest.mark.skipif(not SLOW, reason="set UAV_MEC_SLOW_TESTS=1 to run the full comparison")
def test_joint_scheme_leads_every_baseline(tmp_path):
    """Test the joint scheme's mean indicators over ten seeds of the reference deployment."""
    plan = build_plan(list(StrategyKind), list(range(10)), tmp_path)
    means = _mean_report(run_plan(ScenarioConfig(), plan, workers=os.cpu_count() or 1), "strategy")
    joint = means.loc[StrategyKind.TJCCT.value]

    inversions = []
    for kind in StrategyKind:
        if kind == StrategyKind.TJCCT:
            continue
        base = means.loc[kind.value]
        for metric in ("system_utility", "processing_rate", "completion_ratio"):
            if joint[metric] < base[metric]:
                inversions.append(abs(base[metric] - joint[metric]) / max(abs(base[metric]), 1e-12))
        if joint["completion_delay"] > base["completion_delay"]:
            inversions.append((joint["completion_delay"] - base["completion_delay"]) / base["completion_delay"])
    assert len(inversions) <= 1
    assert all(gap <= 0.02 for gap in inversions)

    ratio = means["completion_ratio"]
    assert ratio[StrategyKind.LS.value] < ratio.drop(StrategyKind.LS.value).min()


@pytest.mark.skipif(not SLOW, reason="set UAV_MEC_SLOW_TESTS=1 to run the device-count sweep")
def test_joint_utility_grows_with_device_count(tmp_path):
    """Test the joint scheme's utility rises with the number of devices."""
    plan = build_plan([StrategyKind.TJCCT], [0, 1, 2], tmp_path, SweepSpec.parse("md-count=10:20:90"))
    utility = _mean_report(run_plan(ScenarioConfig(), plan, workers=os.cpu_count() or 1), "value")["system_utility"]

    assert list(utility.index) == [10.0, 30.0, 50.0, 70.0, 90.0]
    drops = [(a - b) / abs(a) for a, b in zip(utility.iloc[:-1], utility.iloc[1:]) if b < a]
    assert len(drops) <= 1
    assert all(drop <= 0.02 for drop in drops)
