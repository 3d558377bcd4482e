"""Memories, the protocol table, and the updatable graph.

Long-term memory comes in three kinds: per-agent cells (``M_A``), genuine
shared cells (``M_SG``), and dependent shared views (``M_SD``) that mirror
one ``M_A`` chunk across all agents.  Each protocol row declares one chunk:
where it lives, how it is initialized, how it is updated, and which chunk
feeds that update.  The update-source edges form the updatable graph, whose
validity (a forest rooted at generative state chunks, shared chunks as
leaves) is what makes the cycle-wise update order well defined.

Names starting with ``$`` denote state sets; all others are single states.
Buffered updates keep the long-term memory frozen while agents work: clones
are captured at submission time and folded in at the end of the cycle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Iterable, Mapping, Sequence

from .problems import ConstrainedProblem, EvaluationCounter
from .quality import Comparator, State
from .toolbox import RuleInstance, ie_random, ue_tournament_replace

__all__ = [
    "DependentView",
    "Diagnostic",
    "MemorySystem",
    "ProtocolRow",
    "SetSize",
    "UpdatableGraph",
    "build_updatable_graph",
    "flush_updates",
    "initialize",
    "is_forest",
    "is_set_chunk",
    "make_memory_system",
    "submit",
    "validate_protocol",
]

MEMORY_IDS = ("M_A", "M_SG", "M_SD")


def is_set_chunk(name: str) -> bool:
    """State-set chunks are ``$``-prefixed; plain names are single states."""
    return name.startswith("$")


@dataclass(frozen=True, slots=True)
class SetSize:
    """Declared cardinality of a set chunk; optionally scaled by the agent count."""

    count: int
    per_agent: bool = False

    def resolve(self, n_agents: int) -> int:
        return self.count * n_agents if self.per_agent else self.count

    def __str__(self) -> str:
        return f"{self.count}*N" if self.per_agent else str(self.count)


@dataclass(frozen=True, slots=True)
class ProtocolRow:
    """One declared chunk: residence, init rule, update rule, update source."""

    memory_id: str
    chunk_name: str
    init_rule: RuleInstance | None
    update_rule: RuleInstance | None
    update_source: str
    set_size: SetSize | None = None


@dataclass(frozen=True, slots=True)
class Diagnostic:
    """A broken validity rule, identified by a stable code."""

    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass(frozen=True, slots=True)
class UpdatableGraph:
    """Update-source edges: ``parent[child] = source feeding child``.

    Roots are the names that never appear as a declared chunk — the
    generative chunks agents produce fresh each cycle.
    """

    nodes: frozenset[str]
    parent: Mapping[str, str]
    roots: frozenset[str]


def build_updatable_graph(rows: Sequence[ProtocolRow]) -> UpdatableGraph:
    """Derive the graph from protocol rows (one edge per row)."""
    declared = {row.chunk_name for row in rows}
    parent = {row.chunk_name: row.update_source for row in rows}
    nodes = declared | {row.update_source for row in rows}
    roots = frozenset(nodes - declared)
    return UpdatableGraph(nodes=frozenset(nodes), parent=parent, roots=roots)


def is_forest(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> bool:
    """True iff the directed graph (edges ``parent -> child``) is a forest:
    every node has at most one parent and no directed cycle exists."""
    parent: dict[str, str] = {}
    for src, dst in edges:
        if dst in parent:
            return False
        parent[dst] = src
    for start in nodes:
        seen = {start}
        node = start
        while node in parent:
            node = parent[node]
            if node in seen:
                return False
            seen.add(node)
    return True


def validate_protocol(rows: Sequence[ProtocolRow]) -> list[Diagnostic]:
    """Check every protocol validity rule; returns all violations found."""
    violations: list[Diagnostic] = []
    seen: set[str] = set()
    for row in rows:
        if row.chunk_name in seen:
            violations.append(
                Diagnostic(
                    "MP-DUPLICATE-CHUNK",
                    f"chunk name {row.chunk_name!r} is declared more than once; "
                    "chunk names must be unique across the protocol table",
                )
            )
        seen.add(row.chunk_name)
        if row.memory_id not in MEMORY_IDS:
            violations.append(
                Diagnostic(
                    "MP-MEMORY-ID",
                    f"row {row.chunk_name!r}: unknown memory {row.memory_id!r}",
                )
            )
        is_set = is_set_chunk(row.chunk_name)
        if is_set and row.set_size is None and row.memory_id != "M_SD":
            violations.append(
                Diagnostic(
                    "MP-SET-SIZE",
                    f"set chunk {row.chunk_name!r} needs a declared cardinality",
                )
            )
        if not is_set and row.set_size is not None:
            violations.append(
                Diagnostic(
                    "MP-SET-SIZE",
                    f"state chunk {row.chunk_name!r} cannot carry a cardinality",
                )
            )
        if row.memory_id == "M_SD":
            if row.init_rule is not None or row.update_rule is not None:
                violations.append(
                    Diagnostic(
                        "MP-ROW-SHAPE",
                        f"dependent chunk {row.chunk_name!r} must not declare "
                        "init or update rules (it mirrors its source)",
                    )
                )
        else:
            if row.init_rule is None or row.update_rule is None:
                violations.append(
                    Diagnostic(
                        "MP-ROW-SHAPE",
                        f"genuine chunk {row.chunk_name!r} needs both an init "
                        "and an update rule",
                    )
                )
            _check_rule_kinds(row, is_set, violations)

    by_name = {row.chunk_name: row for row in rows}
    ms_names = {
        row.chunk_name for row in rows if row.memory_id in ("M_SG", "M_SD")
    }
    ma_names = {row.chunk_name for row in rows if row.memory_id == "M_A"}

    for row in rows:
        src = row.update_source
        if src in ms_names:
            violations.append(
                Diagnostic(
                    "MP-MS-LEAF",
                    f"chunk {src!r} feeds the update of {row.chunk_name!r}, but "
                    "every shared-memory chunk must be a leaf of the updatable "
                    "graph (it may never be an update source)",
                )
            )
        elif src not in by_name and is_set_chunk(src):
            violations.append(
                Diagnostic(
                    "MP-ROOT-TYPE",
                    f"update source {src!r} is a generative root but is set-typed; "
                    "every root of the updatable graph must be a single state "
                    "(solution property)",
                )
            )
        if row.memory_id == "M_SD" and src not in ma_names:
            violations.append(
                Diagnostic(
                    "MP-SD-SOURCE",
                    f"dependent chunk {row.chunk_name!r} must mirror an agent-"
                    f"memory chunk, but {src!r} is not one",
                )
            )

    graph = build_updatable_graph(rows)
    edges = [(src, dst) for dst, src in graph.parent.items()]
    if not is_forest(graph.nodes, edges):
        violations.append(
            Diagnostic(
                "MP-CYCLE",
                "the update-source edges contain a cycle; the updatable graph "
                "must be a forest",
            )
        )
    return violations


def _check_rule_kinds(
    row: ProtocolRow, is_set: bool, violations: list[Diagnostic]
) -> None:
    if row.init_rule is not None and row.init_rule.kind != "IE.X.RND":
        violations.append(
            Diagnostic(
                "MP-RULE-KIND",
                f"chunk {row.chunk_name!r}: unknown init rule "
                f"{row.init_rule.kind!r}",
            )
        )
    if row.update_rule is None:
        return
    kind = row.update_rule.kind
    if is_set and kind != "UE.X.TS":
        violations.append(
            Diagnostic(
                "MP-RULE-KIND",
                f"set chunk {row.chunk_name!r} needs a set update rule, got "
                f"{kind!r}",
            )
        )
    elif not is_set and kind not in ("UE.S.D", "UE.S.G"):
        violations.append(
            Diagnostic(
                "MP-RULE-KIND",
                f"state chunk {row.chunk_name!r} needs a single-state update "
                f"rule, got {kind!r}",
            )
        )


class DependentView(Sequence):
    """Read-only sequence mirroring one agent-memory chunk across all agents.

    Indexing reads the live cells, so the view reflects every flush with no
    maintenance of its own.
    """

    __slots__ = ("_agent_cells", "_name")

    def __init__(self, agent_cells: list[dict[str, State]], name: str) -> None:
        self._agent_cells = agent_cells
        self._name = name

    def __getitem__(self, index):  # type: ignore[override]
        if isinstance(index, slice):
            return [cells[self._name] for cells in self._agent_cells[index]]
        return self._agent_cells[index][self._name]

    def __len__(self) -> int:
        return len(self._agent_cells)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"DependentView({self._name!r}, n={len(self)})"


class MemorySystem:
    """All memory cells for one run, plus the per-cycle buffers.

    Single-state chunks live in per-agent dicts (``agent_cells`` for LTM,
    ``generative`` for the fresh per-cycle chunks, ``agent_buffers`` for
    staged updates); set chunks live in ``shared_sets`` with staged
    candidates accumulating in ``shared_buffers``.
    """

    __slots__ = (
        "rows",
        "n_agents",
        "row_by_name",
        "a_rows",
        "sg_rows",
        "sd_rows",
        "set_sizes",
        "agent_cells",
        "generative",
        "shared_sets",
        "shared_cells",
        "dependent",
        "agent_buffers",
        "shared_buffers",
    )

    def __init__(self, rows: Sequence[ProtocolRow], n_agents: int) -> None:
        if n_agents < 1:
            raise ValueError(f"need at least one agent, got {n_agents}")
        self.rows = tuple(rows)
        self.n_agents = n_agents
        self.row_by_name = {row.chunk_name: row for row in rows}
        self.a_rows = tuple(r for r in rows if r.memory_id == "M_A")
        self.sg_rows = tuple(r for r in rows if r.memory_id == "M_SG")
        self.sd_rows = tuple(r for r in rows if r.memory_id == "M_SD")
        self.set_sizes = {
            r.chunk_name: r.set_size.resolve(n_agents)
            for r in self.sg_rows
            if r.set_size is not None
        }
        self.agent_cells: list[dict[str, State]] = [dict() for _ in range(n_agents)]
        self.generative: list[dict[str, State]] = [dict() for _ in range(n_agents)]
        self.shared_sets: dict[str, list[State]] = {}
        self.shared_cells: dict[str, State] = {}
        self.dependent: dict[str, DependentView] = {}
        self.agent_buffers: list[dict[str, State]] = [dict() for _ in range(n_agents)]
        self.shared_buffers: dict[str, list[State]] = {
            r.chunk_name: [] for r in self.sg_rows
        }

    def chunk_names(self) -> tuple[str, ...]:
        return tuple(self.row_by_name)


def make_memory_system(rows: Sequence[ProtocolRow], n_agents: int) -> MemorySystem:
    """Build the (still empty) memory layout for ``n_agents`` agents."""
    return MemorySystem(rows, n_agents)


def initialize(
    mem: MemorySystem,
    problem: ConstrainedProblem,
    rng: Random,
    counter: EvaluationCounter | None = None,
) -> None:
    """Fill genuine long-term memory and bind the dependent views.

    Agent cells initialize agent by agent (ascending), rows in table order;
    shared genuine cells follow, also in table order.  Dependent views are
    pure indirection over agent cells, so binding them costs nothing and
    they stay current from here on.
    """
    for agent in range(mem.n_agents):
        cells = mem.agent_cells[agent]
        for row in mem.a_rows:
            cells[row.chunk_name] = ie_random(problem, 1, rng, counter)[0]
    for row in mem.sg_rows:
        if is_set_chunk(row.chunk_name):
            size = mem.set_sizes[row.chunk_name]
            mem.shared_sets[row.chunk_name] = ie_random(problem, size, rng, counter)
        else:
            mem.shared_cells[row.chunk_name] = ie_random(problem, 1, rng, counter)[0]
    for row in mem.sd_rows:
        mem.dependent[row.chunk_name] = DependentView(
            mem.agent_cells, row.update_source
        )


def submit(mem: MemorySystem, agent_id: int, e_upd: Sequence[str]) -> None:
    """Stage one agent's updates: clone each named chunk's update source now.

    States are immutable, so a clone is a reference snapshot.  Sources
    resolve against the agent's own cells first (covering both agent memory
    and its fresh generative chunks), which is what lets a chunk receive the
    pre-update value of another chunk updated in the same cycle.
    """
    cells = mem.agent_cells[agent_id]
    fresh = mem.generative[agent_id]
    buffer = mem.agent_buffers[agent_id]
    for name in e_upd:
        row = mem.row_by_name[name]
        src = row.update_source
        value = cells.get(src)
        if value is None:
            value = fresh[src]
        if row.memory_id == "M_A":
            buffer[name] = value
        else:
            mem.shared_buffers[name].append(value)


def flush_updates(mem: MemorySystem, comparator: Comparator, rng: Random) -> None:
    """Fold all staged updates into long-term memory and clear the buffers.

    Shared genuine chunks flush first (rows in table order, candidates in
    submission order), then each agent's cells (agents ascending, rows in
    table order).  Dependent views need no action.
    """
    for row in mem.sg_rows:
        candidates = mem.shared_buffers[row.chunk_name]
        if not candidates:
            continue
        name = row.chunk_name
        if is_set_chunk(name):
            c_ntw = int(row.update_rule.params["C_NTW"])
            ue_tournament_replace(
                mem.shared_sets[name], candidates, c_ntw, comparator, rng
            )
        elif row.update_rule.kind == "UE.S.D":
            mem.shared_cells[name] = candidates[-1]
        else:  # UE.S.G, candidates folded in submission order
            for candidate in candidates:
                if comparator(candidate.q, mem.shared_cells[name].q):
                    mem.shared_cells[name] = candidate
        candidates.clear()
    for agent in range(mem.n_agents):
        buffer = mem.agent_buffers[agent]
        if not buffer:
            continue
        cells = mem.agent_cells[agent]
        for row in mem.a_rows:
            candidate = buffer.get(row.chunk_name)
            if candidate is None:
                continue
            if row.update_rule.kind == "UE.S.D":
                cells[row.chunk_name] = candidate
            else:  # UE.S.G
                if comparator(candidate.q, cells[row.chunk_name].q):
                    cells[row.chunk_name] = candidate
        buffer.clear()
