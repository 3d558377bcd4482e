"""Experiment harness: seeded batches, aggregation, significance, RLD curves.

A plan names one case, a list of problem instances, and a run count; seeds
are ``base_seed + run_index`` so any batch is reproducible from its plan.
Statistics follow the benchmark convention: objective aggregates are taken
over the runs that reached the feasible region, and an all-infeasible cell
is reported as the failed-run count in parentheses rather than a number.
"""
from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from . import catalog
from .engine import EngineConfig, RunResult, run
from .problems import DEFAULT_EPS_H, ConstrainedProblem
from .script import Script, validate

__all__ = [
    "AggregateStats",
    "ExperimentError",
    "ExperimentPlan",
    "ExperimentResult",
    "InstanceOutcome",
    "RLDSeries",
    "SummaryStats",
    "WelchResult",
    "aggregate",
    "emit_rld",
    "emit_trace",
    "make_rld",
    "mark_solved",
    "run_experiment",
    "welch_t",
    "write_results_csv",
]

#: Output column order of the results table.
RESULT_COLUMNS = (
    "instance",
    "case",
    "runs",
    "feasible",
    "failed",
    "mean",
    "stdev",
    "median",
    "best",
    "worst",
    "solved",
    "nfe_mean",
)


@dataclass(frozen=True)
class ExperimentPlan:
    """One batch: a case, instances, and how many seeded runs of each."""

    script: Script
    case_id: str
    problem_ids: tuple[str, ...]
    runs: int
    base_seed: int
    n_agents: int | None = None
    n_cycles: int | None = None
    eps_h: float = DEFAULT_EPS_H
    collect_trace: bool = False

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError(f"need at least one run, got {self.runs}")


@dataclass(frozen=True)
class AggregateStats:
    """Final-objective statistics over the feasible runs of one instance."""

    n_runs: int
    feasible_runs: int
    failed_runs: int
    mean: float | None
    stdev: float | None
    median: float | None
    best: float | None
    worst: float | None
    solved: bool
    nfe_mean: float


@dataclass(frozen=True)
class RLDSeries:
    """Empirical run-length distribution of one (case, instance) batch."""

    n_runs: int
    solved_cycles: tuple[int, ...]

    def points(self) -> list[tuple[int, float]]:
        """(cycle, cumulative solved fraction) at each distinct solve cycle."""
        out: list[tuple[int, float]] = []
        for index, cycle in enumerate(self.solved_cycles, start=1):
            fraction = index / self.n_runs
            if out and out[-1][0] == cycle:
                out[-1] = (cycle, fraction)
            else:
                out.append((cycle, fraction))
        return out

    @property
    def terminal_fraction(self) -> float:
        return len(self.solved_cycles) / self.n_runs


@dataclass(frozen=True)
class InstanceOutcome:
    """Everything the batch produced for one instance."""

    instance_id: str
    case_id: str
    results: tuple[RunResult, ...]
    stats: AggregateStats
    rld: RLDSeries


@dataclass(frozen=True)
class ExperimentResult:
    outcomes: tuple[InstanceOutcome, ...]

    def outcome(self, instance_id: str) -> InstanceOutcome:
        for outcome in self.outcomes:
            if outcome.instance_id == instance_id:
                return outcome
        raise KeyError(instance_id)


class ExperimentError(RuntimeError):
    """Raised when runs failed; carries what completed anyway."""

    def __init__(
        self,
        failures: Sequence[tuple[str, int, str]],
        partial: ExperimentResult,
    ) -> None:
        lines = ", ".join(
            f"{instance} seed {seed}: {message}"
            for instance, seed, message in failures
        )
        super().__init__(f"{len(failures)} run(s) failed: {lines}")
        self.failures = tuple(failures)
        self.partial = partial


def aggregate(
    results: Sequence[RunResult], problem: ConstrainedProblem
) -> AggregateStats:
    """Summarize a batch; objective statistics use feasible runs only."""
    objectives = sorted(
        res.best.q.v_obj for res in results if res.entered_feasible
    )
    feasible = len(objectives)
    failed = len(results) - feasible
    nfe_mean = statistics.fmean(res.nfe for res in results)
    if feasible == 0:
        return AggregateStats(
            n_runs=len(results), feasible_runs=0, failed_runs=failed,
            mean=None, stdev=None, median=None, best=None, worst=None,
            solved=False, nfe_mean=nfe_mean,
        )
    mean = statistics.fmean(objectives)
    stats = AggregateStats(
        n_runs=len(results),
        feasible_runs=feasible,
        failed_runs=failed,
        mean=mean,
        stdev=statistics.stdev(objectives) if feasible > 1 else 0.0,
        median=statistics.median(objectives),
        best=objectives[0],
        worst=objectives[-1],
        solved=False,
        nfe_mean=nfe_mean,
    )
    return replace(stats, solved=mark_solved(stats, problem))


def mark_solved(stats: AggregateStats, problem: ConstrainedProblem) -> bool:
    """Solved iff the feasible-run mean is within the instance threshold."""
    if stats.mean is None or problem.known_optimum is None:
        return False
    return abs(stats.mean - problem.known_optimum) < problem.solved_tol


def make_rld(results: Sequence[RunResult]) -> RLDSeries:
    cycles = sorted(
        res.first_solved_cycle
        for res in results
        if res.first_solved_cycle is not None
    )
    return RLDSeries(n_runs=len(results), solved_cycles=tuple(cycles))


def run_experiment(plan: ExperimentPlan) -> ExperimentResult:
    """Execute the whole batch; raises ExperimentError if any run failed.

    Runs execute in (instance, run-index) order with seeds
    ``base_seed + run_index``, so the outcome is a pure function of the plan.
    """
    diagnostics = validate(plan.script)
    if diagnostics:
        raise ValueError(
            "script failed validation: " + "; ".join(map(str, diagnostics))
        )
    n_agents = plan.n_agents or plan.script.n_agents
    n_cycles = plan.n_cycles or plan.script.n_cycles
    outcomes: list[InstanceOutcome] = []
    failures: list[tuple[str, int, str]] = []
    for problem_id in plan.problem_ids:
        problem = catalog.load(problem_id, eps_h=plan.eps_h)
        results: list[RunResult] = []
        case_id = plan.case_id
        for index in range(plan.runs):
            seed = plan.base_seed + index
            config = EngineConfig(
                case_id=plan.case_id,
                problem_id=problem_id,
                n_agents=n_agents,
                n_cycles=n_cycles,
                seed=seed,
                eps_h=plan.eps_h,
                collect_trace=plan.collect_trace,
            )
            try:
                result = run(config, plan.script, problem=problem)
            except Exception as error:  # noqa: BLE001 - reported, not dropped
                failures.append((problem_id, seed, f"{type(error).__name__}: {error}"))
                continue
            case_id = result.case_id
            results.append(result)
        if results:
            outcomes.append(
                InstanceOutcome(
                    instance_id=problem_id,
                    case_id=case_id,
                    results=tuple(results),
                    stats=aggregate(results, problem),
                    rld=make_rld(results),
                )
            )
    experiment = ExperimentResult(outcomes=tuple(outcomes))
    if failures:
        raise ExperimentError(failures, experiment)
    return experiment


# --------------------------------------------------------------------------
# Significance testing
# --------------------------------------------------------------------------


class SummaryStats(NamedTuple):
    """Summary form of a sample, for literature entries without raw data."""

    mean: float
    stdev: float
    n: int


class WelchResult(NamedTuple):
    t: float
    df: float
    significant_at_95: bool


def _summarize(sample: SummaryStats | Sequence[float]) -> tuple[float, float, int]:
    if isinstance(sample, SummaryStats):
        mean, stdev, n = sample
    else:
        n = len(sample)
        if n >= 2:
            mean = statistics.fmean(sample)
            stdev = statistics.stdev(sample)
        else:
            mean = stdev = 0.0
    if n < 2:
        raise ValueError(f"welch_t needs sample sizes >= 2, got {n}")
    return mean, stdev * stdev, n


def welch_t(
    sample_a: SummaryStats | Sequence[float],
    sample_b: SummaryStats | Sequence[float],
) -> WelchResult:
    """Two-sided Welch's t-test at the 95% confidence level.

    Accepts raw samples or ``SummaryStats``.  With both variances zero the
    test degenerates: equal means are not significant, unequal means are.
    """
    mean_a, var_a, n_a = _summarize(sample_a)
    mean_b, var_b, n_b = _summarize(sample_b)
    se2 = var_a / n_a + var_b / n_b
    if se2 == 0.0:
        if mean_a == mean_b:
            return WelchResult(0.0, float(n_a + n_b - 2), False)
        return WelchResult(
            math.copysign(math.inf, mean_a - mean_b),
            float(n_a + n_b - 2),
            True,
        )
    t = (mean_a - mean_b) / math.sqrt(se2)
    df = se2 * se2 / (
        (var_a / n_a) ** 2 / (n_a - 1) + (var_b / n_b) ** 2 / (n_b - 1)
    )
    from scipy.stats import t as t_dist

    critical = float(t_dist.ppf(0.975, df))
    return WelchResult(t, df, abs(t) > critical)


# --------------------------------------------------------------------------
# Emission
# --------------------------------------------------------------------------


def _number(value: float | None) -> str:
    return "" if value is None else repr(value)


def result_row(outcome: InstanceOutcome) -> dict[str, str]:
    """One CSV row; an all-infeasible mean cell reads ``(failed-count)``."""
    stats = outcome.stats
    mean = (
        f"({stats.failed_runs})" if stats.feasible_runs == 0 else repr(stats.mean)
    )
    return {
        "instance": outcome.instance_id,
        "case": outcome.case_id,
        "runs": str(stats.n_runs),
        "feasible": str(stats.feasible_runs),
        "failed": str(stats.failed_runs),
        "mean": mean,
        "stdev": _number(stats.stdev),
        "median": _number(stats.median),
        "best": _number(stats.best),
        "worst": _number(stats.worst),
        "solved": str(stats.solved).lower(),
        "nfe_mean": repr(stats.nfe_mean),
    }


def write_results_csv(
    outcomes: Iterable[InstanceOutcome], path: str | Path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for outcome in outcomes:
            writer.writerow(result_row(outcome))


def emit_rld(series: RLDSeries, path: str | Path) -> None:
    """Write the cumulative solved-fraction curve as CSV."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("cycle", "solved_fraction"))
        for cycle, fraction in series.points():
            writer.writerow((cycle, repr(fraction)))


def emit_trace(result: RunResult, path: str | Path) -> None:
    """Write one run's per-cycle progress as CSV."""
    if result.trace is None:
        raise ValueError("run was executed without trace collection")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("cycle", "best_obj", "best_con", "c_er"))
        for row in result.trace:
            writer.writerow((row.cycle, repr(row.best_obj), repr(row.best_con),
                             repr(row.c_er)))
