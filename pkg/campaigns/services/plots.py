"""
Static figures of benchmark artifacts, saved as SVG.

Each builder returns a matplotlib Figure; ``save_svg`` writes it with a
fixed hash salt and no date so equal inputs give equal files.
"""

import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib import cbook  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from campaigns.services.artifacts import Provenance  # noqa: E402
from lateralbench.exceptions import EmptyPlotError  # noqa: E402
from tuning.services.archive import OBJECTIVES, WORK_ZONE, ParetoArchive, WorkZone  # noqa: E402

logger = logging.getLogger(__name__)

PARETO = "pareto3d-projections"
ERROR_BOXPLOT = "error-boxplot"
SPIDER = "spider"
ERROR_VS_CURVATURE = "error-vs-curvature"
RUNTIME_BOXPLOT = "runtime-boxplot"
TIME_SERIES = "time-series"
PLOT_KINDS = (PARETO, ERROR_BOXPLOT, SPIDER, ERROR_VS_CURVATURE, RUNTIME_BOXPLOT, TIME_SERIES)

SPIDER_METRICS = ("iae", "m_epsilon", "m_zeta")
CURVATURE_BINS = 8

AXIS_LABELS = {"iae": "IAE [m]", "m_epsilon": "M_epsilon", "m_zeta": "M_zeta"}

plt.rcParams["svg.hashsalt"] = "lateralbench"


def _require(groups, what: str):
    if not groups or all(np.size(values) == 0 for values in groups):
        raise EmptyPlotError(f"Nothing to plot: no {what}")


def save_svg(figure: Figure, target: Union[str, Path], provenance: Optional[Provenance] = None) -> Path:
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None}
    if provenance is not None:
        metadata["Description"] = provenance.header().lstrip("# ")
    figure.savefig(target, format="svg", metadata=metadata, bbox_inches="tight")
    plt.close(figure)
    logger.info(f"Wrote {target}")
    return target


def pareto_projections(archive: ParetoArchive, limits: WorkZone = WORK_ZONE) -> Figure:
    """The three pairwise projections of the objective space, coloured by robustness when known."""
    if len(archive) == 0:
        raise EmptyPlotError("Nothing to plot: the archive is empty")
    values = archive.objective_matrix()
    robustness = [entry.robustness for entry in archive]
    coloured = all(value is not None for value in robustness)

    figure, axes = plt.subplots(1, 3, figsize=(15, 4.5))
    for ax, (i, j) in zip(axes, [(0, 1), (0, 2), (1, 2)]):
        x_name, y_name = OBJECTIVES[i], OBJECTIVES[j]
        if coloured:
            scatter = ax.scatter(values[:, i], values[:, j], c=robustness, cmap="viridis",
                                 vmin=0.0, vmax=100.0, s=14)
        else:
            scatter = ax.scatter(values[:, i], values[:, j], color="tab:blue", s=14)
        ax.axvline(limits[i], color="k", linestyle="--", linewidth=0.8)
        ax.axhline(limits[j], color="k", linestyle="--", linewidth=0.8)
        ax.set_xlabel(AXIS_LABELS[x_name])
        ax.set_ylabel(AXIS_LABELS[y_name])
        ax.grid(alpha=0.3)
    if coloured:
        figure.colorbar(scatter, ax=list(axes), label="Robustness [%]", shrink=0.8)
    figure.suptitle(f"Pareto front ({len(archive)} setups)")
    return figure


def box_statistics(groups: Mapping[str, np.ndarray]) -> List[Dict[str, object]]:
    stats = []
    for label, values in groups.items():
        values = np.asarray(values, dtype=float)
        stats.extend(cbook.boxplot_stats(values[np.isfinite(values)], labels=[label]))
    return stats


def error_boxplot(groups: Mapping[str, np.ndarray]) -> Figure:
    """Lateral error per setup: box plot with a histogram of the same samples beside it."""
    _require(list(groups.values()), "lateral error samples")
    groups = {label: np.asarray(values, dtype=float) for label, values in groups.items() if np.size(values)}
    figure, (box_ax, hist_ax) = plt.subplots(1, 2, figsize=(12, 4.5), sharey=True,
                                             gridspec_kw={"width_ratios": [3, 1]})
    box_ax.bxp(box_statistics(groups), showfliers=False)
    box_ax.axhline(0.0, color="k", linewidth=0.6)
    box_ax.set_ylabel("Lateral error [m]")
    box_ax.tick_params(axis="x", rotation=45)
    for label, values in groups.items():
        hist_ax.hist(values, bins=40, orientation="horizontal", histtype="step", label=label)
    hist_ax.set_xlabel("Samples")
    hist_ax.legend(fontsize="small")
    return figure


def spider(values: Mapping[str, Mapping[str, Optional[float]]], metrics: Sequence[str] = SPIDER_METRICS,
           limits: WorkZone = WORK_ZONE) -> Figure:
    """One closed polygon per setup; each metric is divided by its work-zone limit."""
    _require(list(values.values()), "setups")
    scale = dict(zip(OBJECTIVES, limits))
    angles = np.linspace(0.0, 2.0 * np.pi, len(metrics), endpoint=False)
    closed = np.append(angles, angles[0])

    figure = plt.figure(figsize=(6, 6))
    ax = figure.add_subplot(projection="polar")
    for label, row in values.items():
        radii = [0.0 if row.get(m) is None else float(row[m]) / scale.get(m, 1.0) for m in metrics]
        radii = np.append(radii, radii[0])
        ax.plot(closed, radii, label=label)
        ax.fill(closed, radii, alpha=0.1)
    ax.set_xticks(angles)
    ax.set_xticklabels([AXIS_LABELS.get(m, m) for m in metrics])
    ax.legend(loc="upper right", bbox_to_anchor=(1.3, 1.1), fontsize="small")
    return figure


def curvature_groups(kappa: np.ndarray, e_y: np.ndarray,
                     edges: np.ndarray) -> List[Tuple[float, np.ndarray]]:
    """Lateral errors grouped by curvature bin, as (bin centre, samples); empty bins are skipped."""
    kappa, e_y = np.asarray(kappa, dtype=float), np.asarray(e_y, dtype=float)
    index = np.clip(np.digitize(kappa, edges) - 1, 0, len(edges) - 2)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return [(float(centres[i]), e_y[index == i]) for i in range(len(centres)) if np.any(index == i)]


def error_vs_curvature(runs: Mapping[str, Tuple[np.ndarray, np.ndarray]], bins: int = CURVATURE_BINS) -> Figure:
    """``runs`` maps a label to (curvature, lateral error) samples; one panel per run."""
    _require([e_y for _, e_y in runs.values()], "lateral error samples")
    runs = {label: pair for label, pair in runs.items() if np.size(pair[1])}
    every = np.concatenate([np.asarray(kappa, dtype=float) for kappa, _ in runs.values()])
    low, high = float(np.min(every)), float(np.max(every))
    if high - low < 1e-9:
        low, high = low - 1e-3, high + 1e-3
    edges = np.linspace(low, high, bins + 1)
    width = 0.7 * (edges[1] - edges[0])

    figure, axes = plt.subplots(len(runs), 1, figsize=(8, 2.6 * len(runs)), sharex=True, squeeze=False)
    for ax, (label, (kappa, e_y)) in zip(axes[:, 0], runs.items()):
        groups = curvature_groups(kappa, e_y, edges)
        ax.boxplot([samples for _, samples in groups], positions=[centre for centre, _ in groups],
                   widths=width, showfliers=False, manage_ticks=False)
        ax.axvline(0.0, color="k", linestyle="--", linewidth=0.8)
        ax.set_ylabel("e_y [m]")
        ax.set_title(label, fontsize="small")
    axes[-1, 0].set_xlabel("Curvature [1/m]")
    axes[-1, 0].set_xlim(low - width, high + width)
    return figure


def time_series(runs: Mapping[str, Tuple[np.ndarray, np.ndarray, np.ndarray]]) -> Figure:
    """Lateral error and feedback action against time, one line per run.

    ``runs`` maps a label to (t, e_y, u_fb) samples of one log.
    """
    _require([t for t, _, _ in runs.values()], "log samples")
    runs = {label: series for label, series in runs.items() if np.size(series[0])}
    figure, (error_ax, action_ax) = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
    for label, (t, e_y, u_fb) in runs.items():
        error_ax.plot(t, e_y, linewidth=0.9, label=label)
        action_ax.plot(t, u_fb, linewidth=0.9, label=label)
    error_ax.axhline(0.0, color="k", linewidth=0.6)
    error_ax.set_ylabel("e_y [m]")
    error_ax.legend(fontsize="small")
    action_ax.set_ylabel("u_fb [-]")
    action_ax.set_xlabel("Time [s]")
    for ax in (error_ax, action_ax):
        ax.grid(alpha=0.3)
    return figure


def runtime_boxplot(groups: Mapping[str, np.ndarray]) -> Figure:
    """Feedback-law execution time per controller, in milliseconds on a log axis."""
    _require(list(groups.values()), "runtime samples")
    groups = {label: 1e3 * np.asarray(values, dtype=float) for label, values in groups.items() if np.size(values)}
    figure, ax = plt.subplots(figsize=(8, 4.5))
    ax.bxp(box_statistics(groups), showfliers=False)
    ax.set_yscale("log")
    ax.set_ylabel("Runtime per control cycle [ms]")
    ax.grid(alpha=0.3, which="both")
    return figure
