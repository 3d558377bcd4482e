"""Figure construction stays headless and writes real image files."""
from __future__ import annotations

import pytest

matplotlib = pytest.importorskip("matplotlib")

from conftest import state  # noqa: E402
from cogopt.engine import RunResult, TraceRow  # noqa: E402
from cogopt.harness import InstanceOutcome, RLDSeries, aggregate  # noqa: E402
from conftest import flat_problem  # noqa: E402
from cogopt.plotting import (  # noqa: E402
    rld_figure,
    results_figure,
    save_figure,
    trace_figure,
)

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _result(v_obj, v_con=0.0, trace=None):
    return RunResult(
        case_id="#T", instance_id="FLAT", seed=1,
        best=state((1.0, 2.0), v_con, v_obj), nfe=40,
        entered_feasible=v_con == 0.0, first_solved_cycle=None,
        n_agents=4, n_cycles=3, trace=trace,
    )


def test_rld_figure_labels_terminal_fractions(tmp_path):
    curves = {
        "#A": RLDSeries(n_runs=4, solved_cycles=(3, 5, 5)),
        "#B": RLDSeries(n_runs=4, solved_cycles=()),
    }
    figure = rld_figure(curves, title="demo")
    axes = figure.axes[0]
    labels = [line.get_label() for line in axes.get_lines()]
    assert labels == ["#A (75%)", "#B (0%)"]
    assert axes.get_title() == "demo"

    target = tmp_path / "rld.png"
    save_figure(figure, target)
    assert target.read_bytes()[:8] == _PNG_MAGIC


def test_trace_figure_draws_both_panels(tmp_path):
    traced = _result(1.0, trace=(TraceRow(1, 3.0, 0.5, 0.2),
                                 TraceRow(2, 2.0, 0.0, 0.0)))
    figure = trace_figure(traced, title="t")
    assert len(figure.axes) == 2
    save_figure(figure, tmp_path / "trace.png")
    assert (tmp_path / "trace.png").stat().st_size > 0

    with pytest.raises(ValueError, match="without trace"):
        trace_figure(_result(1.0))


def test_results_figure_marks_all_infeasible_instances(tmp_path):
    problem = flat_problem()
    feasible = (_result(1.0), _result(2.0))
    hopeless = (_result(5.0, v_con=1.0),)
    outcomes = [
        InstanceOutcome("FLAT", "#T", feasible,
                        aggregate(list(feasible), problem), RLDSeries(2, ())),
        InstanceOutcome("FLAT2", "#T", hopeless,
                        aggregate(list(hopeless), problem), RLDSeries(1, ())),
    ]
    figure = results_figure(outcomes, title="spread")
    axes = figure.axes[0]
    tick_labels = [tick.get_text() for tick in axes.get_xticklabels()]
    assert tick_labels == ["FLAT", "FLAT2\n(1)"]
    save_figure(figure, tmp_path / "results.png")
    assert (tmp_path / "results.png").is_file()
