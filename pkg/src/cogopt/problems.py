"""Constrained continuous minimization problems.

A problem asks to minimize ``f(x)`` over a box, subject to every constraint
expression ``g_j(x)`` landing inside a target interval ``[lo_j, hi_j]``.
One-sided constraints use an infinite bound; equality constraints are
zero-width intervals that get widened into ``±eps_h`` bands so that a
searchable quasi-feasible region exists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = [
    "ConstrainedProblem",
    "EvaluationCounter",
    "evaluate",
    "min_constraint_width",
    "relax_equalities",
    "violation",
]

#: Default half-width used to relax equality constraints into intervals.
DEFAULT_EPS_H = 1e-4

Interval = tuple[float, float]

# Maps a coordinate tuple to (objective value, constraint expression values).
EvaluateAll = Callable[[tuple[float, ...]], tuple[float, tuple[float, ...]]]


def relax_equalities(intervals: tuple[Interval, ...], eps_h: float) -> tuple[Interval, ...]:
    """Widen zero-width target intervals into ``±eps_h`` bands.

    Rows that already have positive width (including one-sided rows with an
    infinite bound) pass through unchanged.
    """
    if eps_h < 0.0:
        raise ValueError(f"eps_h must be non-negative, got {eps_h}")
    return tuple(
        (lo - eps_h, hi + eps_h) if lo == hi else (lo, hi) for lo, hi in intervals
    )


@dataclass(frozen=True, slots=True)
class ConstrainedProblem:
    """A box-bounded minimization problem with interval constraints.

    ``intervals`` holds the *relaxed* constraint targets actually used for
    violation accounting; ``raw_intervals`` keeps the original declaration
    (equalities as zero-width rows) so the problem can be re-relaxed at a
    different ``eps_h``.
    """

    instance_id: str
    dimension: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    evaluate_all: EvaluateAll
    raw_intervals: tuple[Interval, ...]
    intervals: tuple[Interval, ...]
    eps_h: float = DEFAULT_EPS_H
    known_optimum: float | None = None
    solved_tol: float = 1e-5
    reference_point: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.lower) != self.dimension or len(self.upper) != self.dimension:
            raise ValueError(
                f"{self.instance_id}: box bounds must match dimension {self.dimension}"
            )
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError(f"{self.instance_id}: degenerate box bounds")
        if len(self.intervals) != len(self.raw_intervals):
            raise ValueError(f"{self.instance_id}: interval row count mismatch")

    @property
    def n_constraints(self) -> int:
        return len(self.intervals)

    def contains(self, x: tuple[float, ...]) -> bool:
        """True when ``x`` lies inside the box (bounds inclusive)."""
        return all(lo <= v <= hi for v, lo, hi in zip(x, self.lower, self.upper))


def make_problem(
    instance_id: str,
    dimension: int,
    lower: tuple[float, ...],
    upper: tuple[float, ...],
    evaluate_all: EvaluateAll,
    raw_intervals: tuple[Interval, ...],
    eps_h: float = DEFAULT_EPS_H,
    known_optimum: float | None = None,
    solved_tol: float = 1e-5,
    reference_point: tuple[float, ...] | None = None,
) -> ConstrainedProblem:
    """Build a problem, applying the equality relaxation once up front."""
    return ConstrainedProblem(
        instance_id=instance_id,
        dimension=dimension,
        lower=lower,
        upper=upper,
        evaluate_all=evaluate_all,
        raw_intervals=raw_intervals,
        intervals=relax_equalities(raw_intervals, eps_h),
        eps_h=eps_h,
        known_optimum=known_optimum,
        solved_tol=solved_tol,
        reference_point=reference_point,
    )


def min_constraint_width(problem: ConstrainedProblem) -> float:
    """Smallest relaxed interval width; ``+inf`` when unconstrained or all one-sided."""
    if not problem.intervals:
        return math.inf
    return min(hi - lo for lo, hi in problem.intervals)


def violation(problem: ConstrainedProblem, g_values: tuple[float, ...]) -> float:
    """Summed distance of each constraint expression from its target interval."""
    total = 0.0
    for g, (lo, hi) in zip(g_values, problem.intervals):
        if g < lo:
            total += lo - g
        elif g > hi:
            total += g - hi
    return total


class EvaluationCounter:
    """Mutable tally of objective-function evaluations (NFE) for one run."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"EvaluationCounter(count={self.count})"


def evaluate(
    problem: ConstrainedProblem,
    x: tuple[float, ...],
    counter: EvaluationCounter | None = None,
) -> tuple[float, tuple[float, ...]]:
    """Evaluate objective and constraint expressions at ``x``.

    Each call counts as one function evaluation against ``counter`` when one
    is supplied.
    """
    if counter is not None:
        counter.count += 1
    return problem.evaluate_all(x)
