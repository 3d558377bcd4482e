"""Figure rendering for batch reports.

Everything here builds ``matplotlib.figure.Figure`` objects directly (no
pyplot state machine) so figures render identically headless and can be
saved next to the CSV files they illustrate.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .engine import RunResult
from .harness import InstanceOutcome, RLDSeries

__all__ = ["rld_figure", "results_figure", "save_figure", "trace_figure"]


def save_figure(figure: Figure, path: str | Path) -> None:
    # Bind a raster canvas explicitly so saving never depends on a GUI
    # backend being importable.
    FigureCanvasAgg(figure)
    figure.savefig(path, dpi=150, bbox_inches="tight")


def rld_figure(curves: Mapping[str, RLDSeries], title: str = "") -> Figure:
    """Step plot of cumulative solved fraction against cycles, one line
    per labeled series."""
    figure = Figure(figsize=(6.0, 4.0))
    axes = figure.add_subplot()
    for label, series in curves.items():
        points = series.points()
        if points:
            cycles = [cycle for cycle, _ in points]
            fractions = [fraction for _, fraction in points]
        else:
            cycles, fractions = [], []
        axes.step(
            [0] + cycles, [0.0] + fractions, where="post",
            label=f"{label} ({series.terminal_fraction:.0%})",
        )
    axes.set_xlabel("cycles")
    axes.set_ylabel("solved fraction")
    axes.set_ylim(-0.02, 1.02)
    if title:
        axes.set_title(title)
    axes.legend(loc="lower right", fontsize="small")
    axes.grid(True, alpha=0.3)
    return figure


def trace_figure(result: RunResult, title: str = "") -> Figure:
    """Two stacked panels over cycles: best objective, then best violation
    with the facilitator's current allowance."""
    if result.trace is None:
        raise ValueError("run was executed without trace collection")
    cycles = [row.cycle for row in result.trace]
    figure = Figure(figsize=(6.0, 5.5))
    top, bottom = figure.subplots(2, 1, sharex=True)
    top.plot(cycles, [row.best_obj for row in result.trace], lw=1.0)
    top.set_ylabel("best objective")
    top.grid(True, alpha=0.3)
    if title:
        top.set_title(title)
    bottom.plot(
        cycles, [row.best_con for row in result.trace], lw=1.0,
        label="best violation",
    )
    bottom.plot(
        cycles, [row.c_er for row in result.trace], lw=1.0, ls="--",
        label="allowance",
    )
    bottom.set_xlabel("cycle")
    bottom.set_yscale("symlog", linthresh=1e-12)
    bottom.legend(fontsize="small")
    bottom.grid(True, alpha=0.3)
    return figure


def results_figure(outcomes: Sequence[InstanceOutcome], title: str = "") -> Figure:
    """Per-instance spread of final objectives over feasible runs,
    normalized to each instance's best run (log scale)."""
    figure = Figure(figsize=(max(6.0, 0.7 * len(outcomes) + 2.0), 4.0))
    axes = figure.add_subplot()
    labels: list[str] = []
    data: list[list[float]] = []
    for outcome in outcomes:
        objectives = [
            res.best.q.v_obj for res in outcome.results if res.entered_feasible
        ]
        feasible = len(objectives)
        label = outcome.instance_id
        if feasible == 0:
            label += f"\n({outcome.stats.failed_runs})"
            objectives = []
        else:
            floor = min(objectives)
            objectives = [value - floor for value in objectives]
        labels.append(label)
        data.append(objectives)
    positions = range(1, len(labels) + 1)
    axes.boxplot([d if d else [0.0] for d in data], positions=list(positions))
    axes.set_xticks(list(positions), labels, fontsize="small")
    axes.set_yscale("symlog", linthresh=1e-12)
    axes.set_ylabel("final objective above batch best")
    if title:
        axes.set_title(title)
    axes.grid(True, axis="y", alpha=0.3)
    return figure
