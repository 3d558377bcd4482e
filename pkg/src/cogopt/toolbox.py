"""The rule toolbox: selection, initialization, update, and generating rules.

Every rule is a pure function of its inputs and the run's single uniform
stream; randomness is always consumed through ``rng.random()`` so a scripted
stream of floats can stand in for the real generator in tests.  Index draws
derive from one uniform each: ``min(int(u * n), n - 1)``.

Script-facing rule kinds: SEL.G, SEL.TS(C_NTS, C_BQ), IE.X.RND, UE.S.D,
UE.S.G, UE.X.TS(C_NTW), GE.RND, GE.DE(C_F, C_CR, C_CG), GE.PS(C_A, C_B),
GE.SC(C_NTB).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Mapping, MutableSequence, Sequence

from .problems import ConstrainedProblem, EvaluationCounter
from .quality import Comparator, State, encode

__all__ = [
    "RuleInstance",
    "constriction_coefficient",
    "dimension_displacement",
    "ge_de",
    "ge_ps",
    "ge_random",
    "ge_sc",
    "ie_random",
    "sel_greedy",
    "sel_tournament",
    "ue_direct",
    "ue_greedy",
    "ue_tournament_replace",
    "wrap_into_box",
]


@dataclass(frozen=True)
class RuleInstance:
    """A rule kind plus its bound setting parameters, e.g. SEL.TS(C_NTS=2).

    Equality is structural, so a parsed script and its reserialized twin
    compare equal row by row.
    """

    kind: str
    params: Mapping[str, float | bool | str] = field(default_factory=dict)

    def __str__(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={_fmt_param(v)}" for k, v in self.params.items())
        return f"{self.kind}({inner})"


def _fmt_param(value: float | bool | str) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    return repr(value)


def _draw_index(rng: Random, n: int) -> int:
    """One uniform draw mapped onto {0, ..., n-1}."""
    return min(int(rng.random() * n), n - 1)


# --------------------------------------------------------------------------
# Selection rules
# --------------------------------------------------------------------------


def sel_greedy(states: Sequence[State], comparator: Comparator) -> State:
    """Best member by pairwise scan; earliest index wins ties (the
    comparator's ties keep the incumbent)."""
    if not states:
        raise ValueError("sel_greedy requires a non-empty state set")
    winner = states[0]
    wq = winner.q
    for i in range(1, len(states)):
        s = states[i]
        if not comparator(wq, s.q):
            winner = s
            wq = s.q
    return winner


def sel_tournament(
    states: Sequence[State],
    c_nts: int,
    c_bq: bool,
    comparator: Comparator,
    rng: Random,
) -> State:
    """Draw ``c_nts`` members with replacement; keep the better (or, with
    ``c_bq`` false, the worse) pairwise in draw order; return the survivor."""
    return states[_tournament_index(states, c_nts, c_bq, comparator, rng)]


def _tournament_index(
    states: Sequence[State],
    c_nts: int,
    c_bq: bool,
    comparator: Comparator,
    rng: Random,
) -> int:
    if not states:
        raise ValueError("tournament selection requires a non-empty state set")
    if c_nts < 1:
        raise ValueError(f"tournament size must be >= 1, got {c_nts}")
    n = len(states)
    survivor = _draw_index(rng, n)
    for _ in range(c_nts - 1):
        challenger = _draw_index(rng, n)
        better_held = comparator(states[survivor].q, states[challenger].q)
        # Keep-better keeps the incumbent on ties; keep-worse moves on.
        if better_held != c_bq:
            survivor = challenger
    return survivor


# --------------------------------------------------------------------------
# Initialization rules
# --------------------------------------------------------------------------


def _uniform_coords(problem: ConstrainedProblem, rng: Random) -> tuple[float, ...]:
    random = rng.random
    return tuple(
        lo + random() * (hi - lo) for lo, hi in zip(problem.lower, problem.upper)
    )


def ie_random(
    problem: ConstrainedProblem,
    cardinality: int,
    rng: Random,
    counter: EvaluationCounter | None = None,
) -> list[State]:
    """``cardinality`` uniform in-box states, each with quality encoded.

    Cardinality 1 serves single-state cells; callers unwrap.
    """
    out = []
    for _ in range(cardinality):
        coords = _uniform_coords(problem, rng)
        out.append(State(coords, encode(problem, coords, counter)))
    return out


# --------------------------------------------------------------------------
# Update rules.  Single-state cells live in mutable mappings; set cells are
# mutable sequences updated in place.
# --------------------------------------------------------------------------


def ue_direct(cells: dict[str, State], name: str, candidate: State) -> None:
    """Unconditional replacement."""
    cells[name] = candidate


def ue_greedy(
    cells: dict[str, State], name: str, candidate: State, comparator: Comparator
) -> None:
    """Replace iff the candidate is at least as preferable as the incumbent."""
    if comparator(candidate.q, cells[name].q):
        cells[name] = candidate


def ue_tournament_replace(
    cell: MutableSequence[State],
    candidates: Sequence[State],
    c_ntw: int,
    comparator: Comparator,
    rng: Random,
) -> None:
    """Each candidate overwrites one victim picked by a keep-worse tournament."""
    if c_ntw < 1:
        raise ValueError(f"tournament size must be >= 1, got {c_ntw}")
    for candidate in candidates:
        victim = _tournament_index(cell, c_ntw, False, comparator, rng)
        cell[victim] = candidate


# --------------------------------------------------------------------------
# Generating rules
# --------------------------------------------------------------------------


def ge_random(
    problem: ConstrainedProblem,
    rng: Random,
    counter: EvaluationCounter | None = None,
) -> State:
    """A fresh uniform state; the degenerate no-input scratch search."""
    coords = _uniform_coords(problem, rng)
    return State(coords, encode(problem, coords, counter))


def ge_de(
    problem: ConstrainedProblem,
    x_p: State,
    pool: Sequence[State],
    c_f: float,
    c_cr: float,
    c_cg: float,
    comparator: Comparator,
    rng: Random,
    counter: EvaluationCounter | None = None,
    pool_best: State | None = None,
) -> State:
    """Differential move from ``x_p``: best-vector attraction plus one
    four-parent difference, applied dimension-wise under binomial crossover.

    Parents are drawn from the pool without replacement when it has at least
    four members (rejection redraws), otherwise independently; ``x_p``'s own
    entry is not excluded.  One dimension always mutates; every dimension
    consumes exactly one crossover draw; mutated coordinates falling outside
    the box are resampled uniformly.  ``pool_best`` may inject a precomputed
    ``sel_greedy(pool, comparator)`` result.
    """
    n = len(pool)
    if n == 0:
        raise ValueError("ge_de requires a non-empty parent pool")
    random = rng.random
    ia = min(int(random() * n), n - 1)
    if n >= 4:
        while True:
            ib = min(int(random() * n), n - 1)
            if ib != ia:
                break
        while True:
            ic = min(int(random() * n), n - 1)
            if ic != ia and ic != ib:
                break
        while True:
            idx = min(int(random() * n), n - 1)
            if idx != ia and idx != ib and idx != ic:
                break
    else:
        ib = min(int(random() * n), n - 1)
        ic = min(int(random() * n), n - 1)
        idx = min(int(random() * n), n - 1)
    xa = pool[ia].x
    xb = pool[ib].x
    xc = pool[ic].x
    xd = pool[idx].x
    best = pool_best if pool_best is not None else sel_greedy(pool, comparator)
    xg = best.x
    xp = x_p.x
    lower = problem.lower
    upper = problem.upper
    dim = problem.dimension
    forced = min(int(random() * dim), dim - 1)
    out = []
    for d in range(dim):
        if random() < c_cr or d == forced:
            v = xp[d] + c_cg * (xg[d] - xp[d]) + c_f * (xa[d] - xb[d] + xc[d] - xd[d])
            if v < lower[d] or v > upper[d]:
                v = lower[d] + random() * (upper[d] - lower[d])
        else:
            v = xp[d]
        out.append(v)
    coords = tuple(out)
    return State(coords, encode(problem, coords, counter))


def constriction_coefficient(c_a: float, c_b: float) -> float:
    """Constriction factor 2 / (sqrt(phi*(phi-4)) + phi - 2), phi = c_a + c_b."""
    phi = c_a + c_b
    if phi <= 4.0:
        raise ValueError(f"constriction requires c_a + c_b > 4, got {phi}")
    return 2.0 / (math.sqrt(phi * (phi - 4.0)) + phi - 2.0)


def dimension_displacement(a: float, b: float, span: float) -> float:
    """Folded displacement from ``b`` to ``a`` on an axis of width ``span``:
    differences beyond half the span fold back by one span, keeping the
    magnitude at most half the span."""
    y = a - b
    half = span / 2.0
    if y < -half:
        return span + y
    if y > half:
        return span - y
    return y


def wrap_into_box(v: float, lo: float, hi: float) -> float:
    """Wrap an out-of-box coordinate back in by whole spans (non-negative
    remainder); clamp if rounding still leaves it outside."""
    span = hi - lo
    if v < lo:
        v = hi - (lo - v) % span
    elif v > hi:
        v = lo + (v - hi) % span
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def ge_ps(
    problem: ConstrainedProblem,
    x_o: State,
    x_r: State,
    x_p: State,
    pool: Sequence[State],
    c_a: float,
    c_b: float,
    comparator: Comparator,
    rng: Random,
    counter: EvaluationCounter | None = None,
    pool_best: State | None = None,
) -> State:
    """Constricted swarm move around ``x_r``.

    Per dimension: momentum (displacement from the older state ``x_o``)
    scaled by the constriction factor, plus two fresh-uniform-weighted
    attractions toward the private anchor ``x_p`` and the pool best — all
    three as folded displacements; the result is wrapped back into the box.
    Exactly two draws per dimension.
    """
    c_k = constriction_coefficient(c_a, c_b)
    best = pool_best if pool_best is not None else sel_greedy(pool, comparator)
    xg = best.x
    xo = x_o.x
    xr = x_r.x
    xp = x_p.x
    lower = problem.lower
    upper = problem.upper
    random = rng.random
    out = []
    for d in range(problem.dimension):
        lo = lower[d]
        hi = upper[d]
        span = hi - lo
        half = span / 2.0

        y = xr[d] - xo[d]
        if y < -half:
            y = span + y
        elif y > half:
            y = span - y
        v = xr[d] + c_k * y

        y = xp[d] - xr[d]
        if y < -half:
            y = span + y
        elif y > half:
            y = span - y
        v += c_a * random() * y

        y = xg[d] - xr[d]
        if y < -half:
            y = span + y
        elif y > half:
            y = span - y
        v += c_b * random() * y

        if v < lo:
            v = hi - (lo - v) % span
            if v < lo:
                v = lo
        elif v > hi:
            v = lo + (v - hi) % span
            if v > hi:
                v = hi
        out.append(v)
    coords = tuple(out)
    return State(coords, encode(problem, coords, counter))


def ge_sc(
    problem: ConstrainedProblem,
    x_r: State,
    pool: Sequence[State],
    c_ntb: int,
    comparator: Comparator,
    rng: Random,
    counter: EvaluationCounter | None = None,
) -> State:
    """Social copy: learn from a tournament-picked model.

    The better of (model, ``x_r``) anchors a per-dimension interval of
    half-width ``|anchor - other|``, clipped to the box; the child samples
    uniformly inside it.  Comparator ties make the model the anchor.
    """
    model = sel_tournament(pool, c_ntb, True, comparator, rng)
    if comparator(model.q, x_r.q):
        xb, xw = model.x, x_r.x
    else:
        xb, xw = x_r.x, model.x
    lower = problem.lower
    upper = problem.upper
    random = rng.random
    out = []
    for d in range(problem.dimension):
        b = xb[d]
        h = b - xw[d]
        if h < 0.0:
            h = -h
        lo = b - h
        hi = b + h
        if lo < lower[d]:
            lo = lower[d]
        if hi > upper[d]:
            hi = upper[d]
        out.append(lo + random() * (hi - lo))
    coords = tuple(out)
    return State(coords, encode(problem, coords, counter))
