"""
Benchmark table: every bundled setup on the testing trajectories.

Rows come in family blocks (setup 1, 2, 3, then the family mean row).
Columns hold IAE, MLE, M_epsilon and M_zeta per trajectory followed by
their mean over the trajectories. Runs that diverge or raise are marked in
``status`` and leave their metric cells empty.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from controllers.services.config import LABELS, ControllerConfig
from controllers.services.runner import SimLog, run_closed_loop
from controllers.services.setups import bundled_setups
from lateralbench.exceptions import BenchError
from lateralbench.options import SimulationOptions
from metrics.services.report import METRIC_COLUMNS, MetricsReport, evaluate_log, reports_frame
from trajectory.services.benchmark import benchmark_trajectory
from tuning.services.archive import WORK_ZONE

logger = logging.getLogger(__name__)

TABLE_TRAJECTORIES = ("T1", "T2", "T3")
HIGH_SPEED_TRAJECTORY = "T4"
MEAN = "mean"

# metrics with a work-zone limit
LIMITS = {"iae": WORK_ZONE.iae, "m_epsilon": WORK_ZONE.m_epsilon, "m_zeta": WORK_ZONE.m_zeta}


@dataclass
class RunOutcome:
    setup: str
    kind: str
    trajectory: str
    report: Optional[MetricsReport] = None
    log: Optional[SimLog] = None
    error: str = ""

    @property
    def status(self) -> str:
        if self.error:
            return "error"
        return self.report.status if self.report else "error"

    @property
    def ok(self) -> bool:
        return self.report is not None and not self.report.diverged

    def value(self, metric: str) -> float:
        if not self.ok:
            return math.nan
        value = getattr(self.report, metric)
        return math.nan if value is None else float(value)


@dataclass
class Table4Result:
    table: pd.DataFrame
    high_speed: pd.DataFrame
    outcomes: List[RunOutcome]

    def runs_frame(self) -> pd.DataFrame:
        return reports_frame(
            {"setup": o.setup, "trajectory": o.trajectory, "status": o.status,
             **{metric: o.value(metric) for metric in METRIC_COLUMNS}}
            for o in self.outcomes
        )


def metric_columns(trajectories: Sequence[str]) -> List[str]:
    columns = [f"{name}_{metric}" for name in trajectories for metric in METRIC_COLUMNS]
    return columns + [f"{MEAN}_{metric}" for metric in METRIC_COLUMNS]


def run_setup(config: ControllerConfig, trajectory_name: str, options: SimulationOptions) -> RunOutcome:
    trajectory = benchmark_trajectory(trajectory_name, options.path_step)
    try:
        log = run_closed_loop(trajectory, config, options=options)
        report = evaluate_log(log, trajectory)
    except BenchError as exc:
        logger.warning(f"{config.label} on {trajectory_name} raised: {exc}")
        return RunOutcome(config.label, config.kind, trajectory_name, error=str(exc))
    return RunOutcome(config.label, config.kind, trajectory_name, report, log)


def run_all(tasks: Sequence[Tuple[ControllerConfig, str]], options: SimulationOptions, jobs: int = 1,
            progress: bool = False) -> List[RunOutcome]:
    """Outcomes in task order whatever the number of jobs."""
    tasks = tqdm(tasks, disable=not progress, desc="benchmark runs")
    if jobs == 1:
        return [run_setup(config, name, options) for config, name in tasks]
    return Parallel(n_jobs=jobs)(delayed(run_setup)(config, name, options) for config, name in tasks)


def _flags(outcome: RunOutcome) -> List[str]:
    if not outcome.ok:
        return [f"{outcome.status}@{outcome.trajectory}"]
    return [f"{metric}>{limit:g}@{outcome.trajectory}"
            for metric, limit in LIMITS.items() if outcome.value(metric) > limit]


def setup_row(outcomes: Sequence[RunOutcome], trajectories: Sequence[str]) -> Dict[str, object]:
    by_trajectory = {outcome.trajectory: outcome for outcome in outcomes}
    first = outcomes[0]
    row: Dict[str, object] = {"setup": first.setup, "family": first.kind, "row": "setup"}
    for name in trajectories:
        for metric in METRIC_COLUMNS:
            row[f"{name}_{metric}"] = by_trajectory[name].value(metric)
    for metric in METRIC_COLUMNS:
        row[f"{MEAN}_{metric}"] = float(np.mean([row[f"{name}_{metric}"] for name in trajectories]))
    problems = [outcome for outcome in outcomes if not outcome.ok]
    row["status"] = "ok" if not problems else ";".join(f"{o.status}@{o.trajectory}" for o in problems)
    row["flags"] = ";".join(flag for outcome in outcomes if outcome.ok for flag in _flags(outcome))
    return row


def mean_row(kind: str, rows: Sequence[Mapping[str, object]], trajectories: Sequence[str]) -> Dict[str, object]:
    row: Dict[str, object] = {"setup": f"{LABELS[kind]} {MEAN}", "family": kind, "row": MEAN}
    for column in metric_columns(trajectories):
        row[column] = float(np.mean([r[column] for r in rows]))
    row["status"] = "ok" if all(r["status"] == "ok" for r in rows) else "incomplete"
    row["flags"] = ""
    return row


def build_table(outcomes: Sequence[RunOutcome], trajectories: Sequence[str] = TABLE_TRAJECTORIES,
                with_means: bool = True) -> pd.DataFrame:
    """Rows in the order setups first appear in ``outcomes``, a mean row closing each family."""
    grouped: Dict[str, List[RunOutcome]] = {}
    for outcome in outcomes:
        grouped.setdefault(outcome.setup, []).append(outcome)

    rows: List[Dict[str, object]] = []
    family_rows: List[Dict[str, object]] = []
    for setup_outcomes in grouped.values():
        row = setup_row(setup_outcomes, trajectories)
        if with_means and family_rows and family_rows[-1]["family"] != row["family"]:
            rows.append(mean_row(family_rows[-1]["family"], family_rows, trajectories))
            family_rows = []
        rows.append(row)
        family_rows.append(row)
    if with_means and family_rows:
        rows.append(mean_row(family_rows[-1]["family"], family_rows, trajectories))

    columns = ["setup", "family", "row", *metric_columns(trajectories), "status", "flags"]
    return pd.DataFrame(rows, columns=columns)


def best_setups(table: pd.DataFrame) -> Dict[str, str]:
    """Setup with the lowest mean IAE of each family; failed setups come last."""
    setups = table[table["row"] == "setup"]
    best = {}
    for kind, rows in setups.groupby("family", sort=False):
        ranked = rows.assign(_key=rows[f"{MEAN}_iae"].fillna(math.inf))
        best[kind] = str(ranked.sort_values("_key", kind="stable").iloc[0]["setup"])
    return best


def summary(table: pd.DataFrame, trajectories: Sequence[str] = TABLE_TRAJECTORIES) -> Dict[str, object]:
    """Best setup and value per trajectory and metric, over setup rows only."""
    setups = table[table["row"] == "setup"]
    best: Dict[str, Dict[str, object]] = {}
    for name in (*trajectories, MEAN):
        best[name] = {}
        for metric in METRIC_COLUMNS:
            column = setups[f"{name}_{metric}"]
            if column.isna().all():
                best[name][metric] = None
                continue
            position = int(column.fillna(math.inf).to_numpy().argmin())
            best[name][metric] = {"setup": str(setups.iloc[position]["setup"]),
                                  "value": float(column.iloc[position])}
    failed = setups.loc[setups["status"] != "ok", "setup"].tolist()
    return {"best": best, "best_per_family": best_setups(table), "failed": failed}


def assemble_table4(setups: Optional[Mapping[str, Sequence[ControllerConfig]]] = None,
                    trajectories: Sequence[str] = TABLE_TRAJECTORIES,
                    high_speed: Optional[str] = HIGH_SPEED_TRAJECTORY,
                    options: Optional[SimulationOptions] = None, jobs: int = 1,
                    progress: bool = False) -> Table4Result:
    setups = setups if setups is not None else bundled_setups()
    options = options or SimulationOptions.from_settings()
    tasks = [(config, name) for configs in setups.values() for config in configs for name in trajectories]
    logger.info(f"Running {len(tasks)} benchmark runs with {jobs} job(s)")
    outcomes = run_all(tasks, options, jobs, progress)
    table = build_table(outcomes, trajectories)

    high_speed_table = pd.DataFrame()
    if high_speed:
        chosen = set(best_setups(table).values())
        configs = [config for family in setups.values() for config in family if config.label in chosen]
        extra = run_all([(config, high_speed) for config in configs], options, jobs, progress)
        outcomes.extend(extra)
        high_speed_table = build_table(extra, (high_speed,), with_means=False)

    return Table4Result(table, high_speed_table, outcomes)
