"""
Command-Line Module.

Entry point of the simulator. Expands seeds, strategies and an optional parameter sweep into an
experiment plan, runs the plan (optionally in a process pool), and writes the summary table,
per-run traces and long-format plot data.

Key Features:
- Sweeps over time, computation size, server frequency and device count
- Isolated worker processes; all file writes happen in the parent
- Exit code 2 on configuration errors, unknown strategies or unwritable outputs
"""

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional

import pandas as pd
from pydantic import BaseModel, Field, model_validator

from uav_mec_sim.config import ConfigurationError, LoggingConfig, ScenarioConfig, StrategyKind, apply_overrides, load_config
from uav_mec_sim.simulation import run
from uav_mec_sim.traces import METRIC_COLUMNS, RunTraces, to_frame, write_frame, write_run_traces

logger = logging.getLogger(__name__)

SWEEP_AXES: dict[str, Optional[str]] = {
    "time": None,
    "computation-size": "mds.task_size_scale",
    "server-frequency": "servers.frequency_scale",
    "md-count": "mds.count",
}
REPORT_COLUMNS = ["system_utility", "processing_rate", "completion_delay", "completion_ratio"]
SUMMARY_COLUMNS = [
    "label", "strategy", "seed", "axis", "value", *REPORT_COLUMNS, "generated", "completed", "failed", "violations",
]
EXIT_OK = 0
EXIT_USAGE = 2


class SweepSpec(BaseModel):
    axis: str
    values: list[float] = Field(..., min_length=1)

    @classmethod
    def parse(cls, text: str) -> "SweepSpec":
        """Parse ``axis=start:step:stop`` (stop inclusive)."""
        try:
            axis, span = text.split("=", 1)
            start, step, stop = (float(part) for part in span.split(":"))
        except ValueError as e:
            raise ConfigurationError(f"Malformed sweep '{text}', expected axis=start:step:stop") from e
        axis = axis.strip()
        if axis not in SWEEP_AXES:
            raise ConfigurationError(f"Unknown sweep axis '{axis}', expected one of {', '.join(SWEEP_AXES)}")
        if step <= 0 or stop < start:
            raise ConfigurationError(f"Sweep '{text}' needs a positive step and start <= stop")
        count = math.floor((stop - start) / step + 1e-9) + 1
        return cls(axis=axis, values=[start + i * step for i in range(count)])

    def overrides(self, value: float) -> dict[str, Any]:
        path = SWEEP_AXES[self.axis]
        if path is None:
            return {}
        return {path: int(round(value)) if self.axis == "md-count" else value}


class PlanItem(BaseModel):
    strategy: StrategyKind
    seed: int = Field(..., ge=0)
    overrides: dict[str, Any] = Field(default_factory=dict)
    axis: Optional[str] = None
    value: Optional[float] = None
    label: str


class ExperimentPlan(BaseModel):
    items: list[PlanItem] = Field(..., min_length=1)
    output_dir: Path
    sweep: Optional[SweepSpec] = None

    @model_validator(mode="after")
    def check_unique_labels(self) -> "ExperimentPlan":
        labels = [item.label for item in self.items]
        if len(labels) != len(set(labels)):
            raise ValueError("Plan items must have unique output labels")
        return self


def build_plan(
    strategies: list[StrategyKind], seeds: list[int], output_dir: Path, sweep: Optional[SweepSpec] = None
) -> ExperimentPlan:
    """One item per (sweep value, strategy, seed); the time axis does not multiply runs."""
    points: list[Optional[float]] = [None]
    if sweep is not None and SWEEP_AXES[sweep.axis] is not None:
        points = list(sweep.values)
    items = []
    for value in points:
        for strategy in strategies:
            for seed in seeds:
                label = f"{strategy.value}-seed{seed}"
                overrides: dict[str, Any] = {"seed": seed, "strategy.kind": strategy.value}
                if value is not None:
                    label += f"-{sweep.axis}{value:g}"
                    overrides.update(sweep.overrides(value))
                items.append(
                    PlanItem(
                        strategy=strategy, seed=seed, overrides=overrides, label=label,
                        axis=sweep.axis if value is not None else None, value=value,
                    )
                )
    return ExperimentPlan(items=items, output_dir=output_dir, sweep=sweep)


def run_item(base: dict[str, Any], item: PlanItem) -> tuple[dict[str, Any], RunTraces]:
    """Run one plan item in isolation; returns its summary row and traces."""
    config = apply_overrides(ScenarioConfig.model_validate(base), item.overrides)
    result = run(config)
    row = {
        "label": item.label,
        "strategy": item.strategy.value,
        "seed": item.seed,
        "axis": item.axis,
        "value": item.value,
        **{column: getattr(result.report, column) for column in REPORT_COLUMNS},
        "generated": result.report.generated,
        "completed": result.report.completed,
        "failed": result.report.failed,
        "violations": len(result.violations),
    }
    return row, result.traces


def run_plan(config: ScenarioConfig, plan: ExperimentPlan, workers: int = 1) -> pd.DataFrame:
    """Run every item, write per-run traces and the summary table; returns the summary."""
    base = config.model_dump(mode="json")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            outputs = list(executor.map(run_item, [base] * len(plan.items), plan.items))
    else:
        outputs = [run_item(base, item) for item in plan.items]

    rows = []
    series: dict[str, pd.DataFrame] = {}
    for item, (row, traces) in zip(plan.items, outputs):
        write_run_traces(traces, plan.output_dir / "runs" / item.label)
        series[item.label] = to_frame(traces.metrics, METRIC_COLUMNS)
        rows.append(row)
    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    write_frame(summary, plan.output_dir / "summary.csv")
    emit_plot_data(summary, series, plan)
    logger.info(f"Wrote {len(rows)} runs to {plan.output_dir}")
    return summary


def emit_plot_data(summary: pd.DataFrame, series: dict[str, pd.DataFrame], plan: ExperimentPlan) -> list[Path]:
    """Long-format tables keyed by (sweep value, strategy, metric), averaged over seeds."""
    written = []
    strategies = summary.set_index("label")["strategy"]

    frames = []
    for label, frame in series.items():
        long = frame.melt(id_vars="slot", value_vars=REPORT_COLUMNS, var_name="metric")
        long["strategy"] = strategies[label]
        frames.append(long)
    if frames:
        time_series = pd.concat(frames, ignore_index=True)
        if plan.sweep is not None and plan.sweep.axis == "time":
            time_series = time_series[time_series["slot"].isin([int(round(v)) for v in plan.sweep.values])]
        time_plot = (
            time_series.groupby(["slot", "strategy", "metric"], sort=True)["value"].mean().reset_index()
        )
        written.append(write_frame(time_plot, plan.output_dir / "plot_time.csv"))

    if plan.sweep is not None and plan.sweep.axis != "time":
        long = summary.melt(id_vars=["value", "strategy", "seed"], value_vars=REPORT_COLUMNS, var_name="metric", value_name="metric_value")
        grouped = long.groupby(["value", "strategy", "metric"], sort=True)["metric_value"]
        sweep_plot = grouped.agg(mean="mean", std="std", runs="count").reset_index()
        written.append(write_frame(sweep_plot, plan.output_dir / f"plot_{plan.sweep.axis}.csv"))
    return written


def configure_logging(settings: LoggingConfig, level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or settings.level).upper()),
        format=settings.format,
        filename=str(settings.file_path) if settings.file_path else None,
        force=True,
    )


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uav-mec-sim",
        description="Two-timescale UAV-assisted edge computing simulator",
    )
    parser.add_argument("--config", type=Path, default=None, help="YAML scenario file (default: $UAV_MEC_CONFIG)")
    parser.add_argument("--seed", type=int, default=None, help="Single seed (default: the config seed)")
    parser.add_argument("--seeds", type=str, default=None, help="Comma-separated seeds, overrides --seed")
    parser.add_argument("--strategy", type=str, default=None, help="Single strategy name")
    parser.add_argument("--strategies", type=str, default=None, help="Comma-separated strategy names")
    parser.add_argument("--sweep", type=str, default=None, help="axis=start:step:stop over " + ", ".join(SWEEP_AXES))
    parser.add_argument("--output-dir", type=Path, default=Path("results"))
    parser.add_argument("--workers", type=int, default=1, help="Parallel worker processes")
    parser.add_argument("--log-level", type=str, default=None, help="Overrides the configured log level")
    parser.add_argument("-v", "--verbose", action="store_true", help="Shorthand for --log-level DEBUG")
    return parser


def parse_strategies(text: str) -> list[StrategyKind]:
    strategies = [StrategyKind.parse(name) for name in text.split(",") if name.strip()]
    if not strategies or len(set(strategies)) != len(strategies):
        raise ConfigurationError(f"Strategies '{text}' must be a non-empty list without repeats")
    return strategies


def parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise ConfigurationError(f"Malformed seeds '{text}', expected comma-separated integers") from e
    if not seeds or len(set(seeds)) != len(seeds) or min(seeds) < 0:
        raise ConfigurationError(f"Seeds '{text}' must be distinct non-negative integers")
    return seeds


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config)
        configure_logging(config.logging, "DEBUG" if args.verbose else args.log_level)

        strategies = parse_strategies(args.strategies or args.strategy or config.strategy.kind.value)
        if args.seeds:
            seeds = parse_seeds(args.seeds)
        else:
            seeds = parse_seeds(str(args.seed if args.seed is not None else config.seed))
        sweep = SweepSpec.parse(args.sweep) if args.sweep else None
        plan = build_plan(strategies, seeds, args.output_dir, sweep)
        run_plan(config, plan, workers=max(1, args.workers))
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"Cannot write outputs: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
