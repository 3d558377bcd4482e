"""Run execution: the cooperative search loop over agents and cycles.

One run owns a single seeded uniform stream that serializes every random
decision in program order: memory initialization, the optional allowance
schedule, row selection, generation, and buffered update folding.  Agents
execute in ascending id order, and long-term memory only changes at the
end-of-cycle flush, so every agent in a cycle sees the same memory image.
Replaying a config with the same seed reproduces the run bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Callable, NamedTuple, Sequence

from . import catalog
from .memory import (
    MemorySystem,
    flush_updates,
    initialize,
    is_set_chunk,
    make_memory_system,
    submit,
)
from .problems import DEFAULT_EPS_H, ConstrainedProblem, EvaluationCounter
from .quality import State, adjust_ratio_reaching, keep_best, make_facilitator
from .script import ActiveRow, RunnableCase, Script, resolve_case
from .toolbox import ge_de, ge_ps, ge_random, ge_sc, sel_greedy

__all__ = [
    "EngineConfig",
    "RunResult",
    "RunState",
    "TraceRow",
    "meta_manage",
    "run",
    "step_cycle",
]

#: A bound heuristic: (agent id, cycle pools, cycle pool-bests) -> new state.
GenFn = Callable[[int, dict, dict], State]


@dataclass(frozen=True)
class EngineConfig:
    """Everything one run needs besides the script itself."""

    case_id: str
    problem_id: str
    n_agents: int
    n_cycles: int
    seed: int
    eps_h: float = DEFAULT_EPS_H
    collect_trace: bool = False


class TraceRow(NamedTuple):
    """Per-cycle progress snapshot (best-so-far and current allowance)."""

    cycle: int
    best_obj: float
    best_con: float
    c_er: float


@dataclass(frozen=True)
class RunResult:
    """Outcome of one run; ``best`` is judged by the untransformed problem."""

    case_id: str
    instance_id: str
    seed: int
    best: State
    nfe: int
    entered_feasible: bool
    first_solved_cycle: int | None
    n_agents: int
    n_cycles: int
    trace: tuple[TraceRow, ...] | None = None


def _draw_row_index(cumulative: Sequence[float], rng: Random) -> int:
    """Pick a row by cumulative weight; a lone row costs no draw."""
    if len(cumulative) == 1:
        return 0
    u = rng.random()
    for index, edge in enumerate(cumulative):
        if u < edge:
            return index
    return len(cumulative) - 1


def meta_manage(case: RunnableCase, rng: Random) -> ActiveRow:
    """Select the executive row for one agent, weight-proportionally."""
    return case.rows[_draw_row_index(case.cumulative, rng)]


class RunState:
    """Live state of one run; ``step_cycle`` advances it one full cycle."""

    def __init__(
        self,
        config: EngineConfig,
        script: Script,
        problem: ConstrainedProblem | None = None,
        rng: Random | None = None,
    ) -> None:
        if config.n_agents < 1:
            raise ValueError(f"need at least one agent, got {config.n_agents}")
        if config.n_cycles < 1:
            raise ValueError(
                f"need at least one cycle, got {config.n_cycles} "
                "(no state is ever generated otherwise)"
            )
        self.config = config
        self.problem = (
            problem
            if problem is not None
            else catalog.load(config.problem_id, eps_h=config.eps_h)
        )
        self.rng = rng if rng is not None else Random(config.seed)
        self.case = resolve_case(script, config.case_id)
        self.counter = EvaluationCounter()
        self.facilitator = make_facilitator(
            self.problem, script.spec_f.kind, dict(script.spec_f.params), self.rng
        )
        self.mem: MemorySystem = make_memory_system(script.spec_mp, config.n_agents)
        initialize(self.mem, self.problem, self.rng, self.counter)
        self.init_nfe = self.counter.count

        self.n_agents = config.n_agents
        self.n_cycles = config.n_cycles
        self.cumulative = self.case.cumulative
        self.bound: list[tuple[GenFn, tuple[str, ...], str]] = [
            (self._bind(row), row.e_upd, row.generative.ch_og)
            for row in self.case.rows
        ]
        self.pool_names = sorted(
            {
                name
                for row in self.case.rows
                for name in row.generative.e_ig
                if is_set_chunk(name)
            }
        )
        # Pools whose case rows want the pool's best member each generation.
        self.best_pool_names = sorted(
            {
                row.generative.e_ig[-1]
                for row in self.case.rows
                if row.generative.rule.kind in ("GE.DE", "GE.PS")
            }
        )
        # The best-member lookup may be shared across a cycle only when the
        # internal comparator consumes no randomness.
        self.memo_pool_best = script.spec_f.kind != "S"
        feedback_name = self.facilitator.feedback_chunk
        self.feedback_cells: Sequence[State] | None = None
        if feedback_name:
            self.feedback_cells = self.mem.dependent.get(
                feedback_name
            ) or self.mem.shared_sets.get(feedback_name)
            if self.feedback_cells is None:
                raise ValueError(
                    f"feedback chunk {feedback_name!r} is not a declared set chunk"
                )

    def _state_getter(self, name: str) -> Callable[[int], State]:
        row = self.mem.row_by_name[name]
        if row.memory_id == "M_A":
            cells_list = self.mem.agent_cells
            return lambda agent: cells_list[agent][name]
        shared = self.mem.shared_cells
        return lambda agent: shared[name]

    def _bind(self, active: ActiveRow) -> GenFn:
        """Close a heuristic row over its parameters and input lookups."""
        rule = active.generative.rule
        names = active.generative.e_ig
        problem = self.problem
        internal = self.facilitator.internal
        rng = self.rng
        counter = self.counter
        if rule.kind == "GE.DE":
            get_x, pool_name = self._state_getter(names[0]), names[1]
            c_f = float(rule.params["C_F"])
            c_cr = float(rule.params["C_CR"])
            c_cg = float(rule.params["C_CG"])

            def gen_de(agent: int, pools: dict, bests: dict) -> State:
                return ge_de(
                    problem, get_x(agent), pools[pool_name], c_f, c_cr, c_cg,
                    internal, rng, counter, bests.get(pool_name),
                )

            return gen_de
        if rule.kind == "GE.PS":
            get_o = self._state_getter(names[0])
            get_r = self._state_getter(names[1])
            get_p = self._state_getter(names[2])
            pool_name = names[3]
            c_a = float(rule.params["C_A"])
            c_b = float(rule.params["C_B"])

            def gen_ps(agent: int, pools: dict, bests: dict) -> State:
                return ge_ps(
                    problem, get_o(agent), get_r(agent), get_p(agent),
                    pools[pool_name], c_a, c_b, internal, rng, counter,
                    bests.get(pool_name),
                )

            return gen_ps
        if rule.kind == "GE.SC":
            get_r, pool_name = self._state_getter(names[0]), names[1]
            c_ntb = int(rule.params["C_NTB"])

            def gen_sc(agent: int, pools: dict, bests: dict) -> State:
                return ge_sc(
                    problem, get_r(agent), pools[pool_name], c_ntb,
                    internal, rng, counter,
                )

            return gen_sc
        if rule.kind == "GE.RND":

            def gen_rnd(agent: int, pools: dict, bests: dict) -> State:
                return ge_random(problem, rng, counter)

            return gen_rnd
        raise ValueError(f"unknown generating rule kind {rule.kind!r}")

    def pool_snapshot(self, name: str) -> Sequence[State]:
        """The cycle-start value of a set chunk (views are materialized)."""
        view = self.mem.dependent.get(name)
        if view is not None:
            return list(view)
        return self.mem.shared_sets[name]


def step_cycle(rs: RunState, t: int) -> None:
    """One full cycle: allowance step, agent loop, end-of-cycle flush."""
    facilitator = rs.facilitator
    if facilitator.adjuster is not None:
        feedback = [state.q for state in rs.feedback_cells]
        adjust_ratio_reaching(facilitator.adjuster, t, rs.n_cycles, feedback)
    pools = {name: rs.pool_snapshot(name) for name in rs.pool_names}
    bests: dict[str, State] = {}
    if rs.memo_pool_best:
        for name in rs.best_pool_names:
            bests[name] = sel_greedy(pools[name], facilitator.internal)
    mem = rs.mem
    rng = rs.rng
    bound = rs.bound
    cumulative = rs.cumulative
    generative = mem.generative
    for agent in range(rs.n_agents):
        gen_fn, e_upd, ch_og = bound[_draw_row_index(cumulative, rng)]
        candidate = gen_fn(agent, pools, bests)
        generative[agent][ch_og] = candidate
        submit(mem, agent, e_upd)
        keep_best(facilitator, candidate.x, candidate.q)
    flush_updates(mem, facilitator.internal, rng)


def run(
    config: EngineConfig,
    script: Script,
    problem: ConstrainedProblem | None = None,
    rng: Random | None = None,
) -> RunResult:
    """Execute one full run and return its outcome.

    The script must already have passed validation; the case is resolved
    here.  ``problem`` and ``rng`` default to the catalog instance named by
    the config and a fresh generator seeded with ``config.seed``.
    """
    rs = RunState(config, script, problem, rng)
    problem = rs.problem
    optimum = problem.known_optimum
    solved_tol = problem.solved_tol
    trace: list[TraceRow] | None = [] if config.collect_trace else None
    first_solved: int | None = None
    facilitator = rs.facilitator
    for t in range(1, config.n_cycles + 1):
        step_cycle(rs, t)
        best = facilitator.best_so_far
        if (
            first_solved is None
            and optimum is not None
            and best.q.v_con == 0.0
            and abs(best.q.v_obj - optimum) < solved_tol
        ):
            first_solved = t
        if trace is not None:
            adjuster = facilitator.adjuster
            trace.append(
                TraceRow(
                    t,
                    best.q.v_obj,
                    best.q.v_con,
                    adjuster.c_er if adjuster is not None else 0.0,
                )
            )
    best = facilitator.best_so_far
    return RunResult(
        case_id=rs.case.case_id,
        instance_id=problem.instance_id,
        seed=config.seed,
        best=best,
        nfe=rs.counter.count,
        entered_feasible=best.q.v_con == 0.0,
        first_solved_cycle=first_solved,
        n_agents=config.n_agents,
        n_cycles=config.n_cycles,
        trace=tuple(trace) if trace is not None else None,
    )
