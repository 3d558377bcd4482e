"""Solution quality: encoding, comparison rules, and the group facilitator.

Every candidate solution is reduced to a quality pair ``(v_con, v_obj)`` —
summed constraint violation and objective value.  Comparison rules decide
"is ``a`` at least as preferable as ``b``"; the facilitator owns the natural
rule (used for best-so-far reporting), the internal rule (used for all
search decisions), and an optional run-time landscape adjuster that
schedules a shrinking violation allowance for equality-constrained
problems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Callable, NamedTuple, Sequence

from .problems import (
    ConstrainedProblem,
    EvaluationCounter,
    evaluate,
    min_constraint_width,
    violation,
)

__all__ = [
    "AdjusterState",
    "Comparator",
    "Facilitator",
    "QualityPair",
    "State",
    "adjust_ratio_reaching",
    "encode",
    "keep_best",
    "make_adjuster",
    "make_facilitator",
    "qc_natural",
    "qc_o3r",
    "qc_penalized",
    "qc_static_relaxing",
    "qc_stochastic",
]


class QualityPair(NamedTuple):
    """(violation sum, objective value); field order makes lexicographic
    tuple comparison coincide with the natural preference rule."""

    v_con: float
    v_obj: float


class State(NamedTuple):
    """An immutable candidate solution with its cached quality."""

    x: tuple[float, ...]
    q: QualityPair


Comparator = Callable[[QualityPair, QualityPair], bool]


def encode(
    problem: ConstrainedProblem,
    x: tuple[float, ...],
    counter: EvaluationCounter | None = None,
) -> QualityPair:
    """Evaluate ``x`` and summarize it as a quality pair."""
    obj, g_values = evaluate(problem, x, counter)
    return QualityPair(violation(problem, g_values), obj)


# --------------------------------------------------------------------------
# Comparison rules.  Each returns True iff `a` is at least as preferable
# as `b`.
# --------------------------------------------------------------------------


def qc_natural(a: QualityPair, b: QualityPair) -> bool:
    """Less violation wins; ties fall through to the objective."""
    return a.v_con < b.v_con or (a.v_con == b.v_con and a.v_obj <= b.v_obj)


def qc_penalized(a: QualityPair, b: QualityPair, c_ap: float) -> bool:
    """Single-figure comparison of ``v_obj + c_ap * v_con``."""
    if c_ap < 0.0:
        raise ValueError(f"penalty coefficient must be >= 0, got {c_ap}")
    return a.v_obj + c_ap * a.v_con <= b.v_obj + c_ap * b.v_con


def qc_stochastic(a: QualityPair, b: QualityPair, c_pf: float, rng: Random) -> bool:
    """Stochastic-ranking comparison.

    Deterministic clauses first: strictly less violation wins outright, and
    equal violations compare objectives.  Only when both fail (``a`` is the
    more violated pair) is one uniform draw consumed: with probability
    ``c_pf`` the objectives decide anyway, otherwise ``a`` loses.
    """
    if not 0.0 <= c_pf <= 1.0:
        raise ValueError(f"objective-preference probability must be in [0,1], got {c_pf}")
    if a.v_con < b.v_con:
        return True
    if a.v_con == b.v_con:
        return a.v_obj <= b.v_obj
    return rng.random() < c_pf and a.v_obj <= b.v_obj


def qc_static_relaxing(a: QualityPair, b: QualityPair, c_er: float) -> bool:
    """Violations up to the allowance ``c_er`` are treated as feasible.

    Inside the relaxed region only objectives matter; outside it, only a
    strictly smaller violation wins.
    """
    if b.v_con > c_er:
        return a.v_con < b.v_con
    if a.v_con <= c_er:
        return a.v_obj <= b.v_obj
    return False


# --------------------------------------------------------------------------
# Run-time landscape adjustment (ratio-reaching schedule)
# --------------------------------------------------------------------------


@dataclass(slots=True)
class AdjusterState:
    """Mutable schedule state for the shrinking violation allowance.

    ``c_er`` is the current allowance (0 before the first cycle); ``c_ere``
    the target it contracts toward; ``c_rnu`` the reached-ratio threshold
    gating each contraction; ``c_rtu`` the fraction of the horizon over
    which the schedule is active.
    """

    c_ere: float
    c_rnu: float
    c_rtu: float
    c_er: float = 0.0


def _int_half_up(value: float) -> int:
    """Round to the closest integer, halves away from zero (value >= 0)."""
    return int(math.floor(value + 0.5))


def make_adjuster(
    problem: ConstrainedProblem, c_rre: float, c_rnu: float, c_rtu: float
) -> AdjusterState:
    """Build the adjuster for one run; the contraction target is
    ``c_rre`` times the half-width of the narrowest constraint interval."""
    half_width = min_constraint_width(problem) / 2.0
    return AdjusterState(c_ere=c_rre * half_width, c_rnu=c_rnu, c_rtu=c_rtu)


def adjust_ratio_reaching(
    adjuster: AdjusterState,
    t: int,
    n_cycles: int,
    feedback: Sequence[QualityPair],
) -> AdjusterState:
    """Advance the allowance schedule at the start of cycle ``t`` (1-based).

    Past the active horizon the allowance is pinned to zero.  The first
    cycle initializes it to the worst violation in the feedback set.  On
    later active cycles, once the fraction of feedback states already
    within the allowance exceeds ``c_rnu``, the allowance moves one
    geometric step toward the target, reaching it exactly at the horizon.
    """
    t_th = _int_half_up(adjuster.c_rtu * n_cycles)
    if t > t_th:
        adjuster.c_er = 0.0
        return adjuster
    if t == 1:
        if not feedback:
            raise ValueError("feedback set must be non-empty on the first cycle")
        adjuster.c_er = max(q.v_con for q in feedback)
        return adjuster
    c_er = adjuster.c_er
    reached = sum(1 for q in feedback if q.v_con <= c_er)
    # A zero allowance stays zero: the geometric step is undefined there and
    # an all-feasible feedback set needs no relaxation.
    if c_er > 0.0 and reached > adjuster.c_rnu * len(feedback):
        adjuster.c_er = c_er * (adjuster.c_ere / c_er) ** (1.0 / (t_th - t + 1))
    return adjuster


# --------------------------------------------------------------------------
# Facilitator
# --------------------------------------------------------------------------


@dataclass(slots=True)
class Facilitator:
    """Passive group leader: owns the comparison rules and the best-so-far.

    ``natural`` always reports against the untransformed problem; ``internal``
    is what the group actually searches with and may be relaxed over time by
    ``adjuster``.  ``feedback_chunk`` names the shared state-set whose cached
    qualities feed the adjuster (empty when there is none).
    """

    natural: Comparator
    internal: Comparator
    adjuster: AdjusterState | None = None
    feedback_chunk: str = ""
    best_so_far: State | None = None


def keep_best(facilitator: Facilitator, x: tuple[float, ...], q: QualityPair) -> bool:
    """Offer a candidate for the best-so-far slot; strict improvement only.

    Equal-quality candidates never displace the incumbent, so the reported
    solution is always the earliest best.  Returns True when replaced.
    """
    best = facilitator.best_so_far
    if best is None or (q != best.q and qc_natural(q, best.q)):
        facilitator.best_so_far = State(x, q)
        return True
    return False


def qc_o3r(problem: ConstrainedProblem, adjuster: AdjusterState) -> Comparator:
    """Dispatch: relax the landscape only where relaxation is what created
    the feasible region (narrowest interval no wider than its relaxation
    band); otherwise compare naturally."""
    if min_constraint_width(problem) <= 2.0 * problem.eps_h:
        return lambda a, b: qc_static_relaxing(a, b, adjuster.c_er)
    return qc_natural


#: Comparator kinds accepted in facilitator configuration, with the
#: parameter names each requires.
COMPARATOR_PARAMS: dict[str, tuple[str, ...]] = {
    "O": (),
    "P": ("C_AP",),
    "S": ("C_PF",),
    "RS": ("C_ER",),
    "O3R": ("C_RRE", "C_RNU", "C_RTU", "C_FB"),
}


def make_facilitator(
    problem: ConstrainedProblem,
    comparator: str,
    params: dict[str, float | str],
    rng: Random,
) -> Facilitator:
    """Build the facilitator for one run from a validated configuration."""
    if comparator == "O":
        return Facilitator(natural=qc_natural, internal=qc_natural)
    if comparator == "P":
        c_ap = float(params["C_AP"])
        if c_ap < 0.0:
            raise ValueError(f"C_AP must be >= 0, got {c_ap}")
        return Facilitator(
            natural=qc_natural, internal=lambda a, b: qc_penalized(a, b, c_ap)
        )
    if comparator == "S":
        c_pf = float(params["C_PF"])
        if not 0.0 <= c_pf <= 1.0:
            raise ValueError(f"C_PF must be in [0,1], got {c_pf}")
        return Facilitator(
            natural=qc_natural, internal=lambda a, b: qc_stochastic(a, b, c_pf, rng)
        )
    if comparator == "RS":
        c_er = float(params["C_ER"])
        return Facilitator(
            natural=qc_natural, internal=lambda a, b: qc_static_relaxing(a, b, c_er)
        )
    if comparator == "O3R":
        adjuster = make_adjuster(
            problem,
            c_rre=float(params["C_RRE"]),
            c_rnu=float(params["C_RNU"]),
            c_rtu=float(params["C_RTU"]),
        )
        internal = qc_o3r(problem, adjuster)
        if internal is qc_natural:
            # Relaxation has nothing to act on; drop the adjuster entirely.
            return Facilitator(natural=qc_natural, internal=qc_natural)
        return Facilitator(
            natural=qc_natural,
            internal=internal,
            adjuster=adjuster,
            feedback_chunk=str(params["C_FB"]),
        )
    raise ValueError(f"unknown comparator kind {comparator!r}")
