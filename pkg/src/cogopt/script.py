"""Script files: parse, validate, serialize, and resolve runnable cases.

A script is line-oriented sectioned text.  Lines whose first non-blank
character is ``#`` are comments; blank lines are ignored; fields within a
row are ``|``-separated.  Rule instances are written ``KIND(key=value, ...)``
and set chunks carry a ``$`` prefix.  The five section forms:

``[params]``
    ``N = <agents>`` and ``T = <cycles>`` — the overall run size, both
    overridable from the command line.

``[spec-f]``
    One row: the facilitator's comparator, e.g.
    ``O3R(C_RRE=10, C_RNU=0.5, C_RTU=0.5, C_FB=$x_DP)``.

``[spec-mp]``
    Memory-protocol rows ``memory | chunk | init | update | source``;
    dependent chunks write ``-`` for both rules; set chunks may declare a
    cardinality as ``$name size=4*N`` (``*N`` scales with the agent count).

``[spec-g]``
    Heuristic rows ``id | rule | inputs | output``.

``[spec-mm <case-id>]``
    One section per runnable case; rows ``heuristic-id | updates | weight``.

``parse`` fails fast with a line number; ``validate`` collects every broken
validity rule across all four layers; ``serialize`` emits canonical text
whose reparse equals the original script structurally.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping

from .memory import (
    Diagnostic,
    ProtocolRow,
    SetSize,
    build_updatable_graph,
    is_set_chunk,
    validate_protocol,
)
from .quality import COMPARATOR_PARAMS
from .toolbox import RuleInstance

__all__ = [
    "ActiveRow",
    "ExecutiveRow",
    "GenerativeRow",
    "RunnableCase",
    "Script",
    "ScriptError",
    "load_script",
    "override_facilitator",
    "parse",
    "reference_script_path",
    "resolve_case",
    "serialize",
    "validate",
]

GENERATIVE_PARAMS: dict[str, tuple[str, ...]] = {
    "GE.RND": (),
    "GE.DE": ("C_F", "C_CR", "C_CG"),
    "GE.PS": ("C_A", "C_B"),
    "GE.SC": ("C_NTB",),
}
INIT_PARAMS: dict[str, tuple[str, ...]] = {"IE.X.RND": ()}
UPDATE_PARAMS: dict[str, tuple[str, ...]] = {
    "UE.S.D": (),
    "UE.S.G": (),
    "UE.X.TS": ("C_NTW",),
}

# Input signatures: True marks a set-typed slot, False a single state.
GENERATIVE_INPUTS: dict[str, tuple[bool, ...]] = {
    "GE.RND": (),
    "GE.DE": (False, True),
    "GE.PS": (False, False, False, True),
    "GE.SC": (False, True),
}


class ScriptError(ValueError):
    """Malformed script text or an unresolvable request against a script."""

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class GenerativeRow:
    """One embedded search heuristic: rule, input chunks, output chunk."""

    id_g: str
    rule: RuleInstance
    e_ig: tuple[str, ...]
    ch_og: str


@dataclass(frozen=True)
class ExecutiveRow:
    """One case entry: which heuristic, which chunks it updates, its weight."""

    id_g: str
    e_upd: tuple[str, ...]
    c_w: float


@dataclass(frozen=True)
class Script:
    """A parsed script: overall params plus the four specification layers."""

    params: Mapping[str, int]
    spec_f: RuleInstance
    spec_mp: tuple[ProtocolRow, ...]
    spec_g: tuple[GenerativeRow, ...]
    spec_mm: Mapping[str, tuple[ExecutiveRow, ...]]

    @property
    def n_agents(self) -> int:
        return self.params["N"]

    @property
    def n_cycles(self) -> int:
        return self.params["T"]

    def case_ids(self) -> tuple[str, ...]:
        return tuple(self.spec_mm)


@dataclass(frozen=True)
class ActiveRow:
    """A selectable case row after zero-weight rows are dropped."""

    generative: GenerativeRow
    e_upd: tuple[str, ...]
    weight: float


@dataclass(frozen=True)
class RunnableCase:
    """A resolved case: active rows plus cumulative selection probabilities."""

    case_id: str
    rows: tuple[ActiveRow, ...]
    cumulative: tuple[float, ...]


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^\[([a-z-]+)(?:\s+(\S+))?\]$")
_RULE_RE = re.compile(r"^([A-Z][A-Z0-9._]*)(?:\((.*)\))?$")
_SIZE_RE = re.compile(r"^(\d+)(\*N)?$")

_KNOWN_SECTIONS = ("params", "spec-f", "spec-mp", "spec-g", "spec-mm")


def _lines(text: str) -> Iterator[tuple[int, str]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield number, line


def _parse_value(token: str, line: int) -> float | int | bool | str:
    token = token.strip()
    if not token:
        raise ScriptError("empty parameter value", line)
    low = token.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def _parse_rule(token: str, kinds: Mapping[str, tuple[str, ...]], line: int,
                what: str) -> RuleInstance:
    match = _RULE_RE.match(token.strip())
    if match is None:
        raise ScriptError(f"malformed {what} {token!r}", line)
    kind, arglist = match.group(1), match.group(2)
    if kind not in kinds:
        known = ", ".join(sorted(kinds))
        raise ScriptError(f"unknown {what} {kind!r} (known: {known})", line)
    params: dict[str, float | bool | str] = {}
    if arglist is not None and arglist.strip():
        for item in arglist.split(","):
            if "=" not in item:
                raise ScriptError(
                    f"parameter {item.strip()!r} must be written key=value", line
                )
            key, value = item.split("=", 1)
            key = key.strip()
            if key in params:
                raise ScriptError(f"duplicate parameter {key!r}", line)
            params[key] = _parse_value(value, line)
    return RuleInstance(kind, params)


def _parse_chunk_field(token: str, line: int) -> tuple[str, SetSize | None]:
    parts = token.split()
    name = parts[0]
    if len(parts) == 1:
        return name, None
    if len(parts) == 2 and parts[1].startswith("size="):
        match = _SIZE_RE.match(parts[1][5:])
        if match is None:
            raise ScriptError(f"bad set cardinality {parts[1][5:]!r}", line)
        return name, SetSize(int(match.group(1)), match.group(2) is not None)
    raise ScriptError(f"malformed chunk field {token!r}", line)


def _split_names(token: str) -> tuple[str, ...]:
    token = token.strip()
    if token in ("", "-"):
        return ()
    return tuple(name.strip() for name in token.split(","))


def parse(text: str) -> Script:
    """Parse script text; raises ScriptError (with line number) on bad input."""
    params: dict[str, int] = {}
    spec_f: RuleInstance | None = None
    spec_mp: list[ProtocolRow] = []
    spec_g: list[GenerativeRow] = []
    spec_mm: dict[str, list[ExecutiveRow]] = {}
    section: str | None = None
    case_id: str | None = None
    seen: set[str] = set()

    for line_no, line in _lines(text):
        header = _SECTION_RE.match(line)
        if header is not None:
            section, argument = header.group(1), header.group(2)
            if section not in _KNOWN_SECTIONS:
                raise ScriptError(f"unknown section [{section}]", line_no)
            if section == "spec-mm":
                if argument is None:
                    raise ScriptError(
                        "case sections are written [spec-mm <case-id>]", line_no
                    )
                case_id = argument
                if case_id in spec_mm:
                    raise ScriptError(f"duplicate case {case_id!r}", line_no)
                spec_mm[case_id] = []
            else:
                if argument is not None:
                    raise ScriptError(
                        f"section [{section}] takes no argument", line_no
                    )
                if section in seen:
                    raise ScriptError(f"duplicate section [{section}]", line_no)
                seen.add(section)
            continue
        if section is None:
            raise ScriptError(f"content before any section: {line!r}", line_no)

        if section == "params":
            if "=" not in line:
                raise ScriptError("params are written KEY = value", line_no)
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in ("N", "T"):
                raise ScriptError(f"unknown overall parameter {key!r}", line_no)
            if key in params:
                raise ScriptError(f"duplicate overall parameter {key!r}", line_no)
            try:
                params[key] = int(value)
            except ValueError:
                raise ScriptError(
                    f"parameter {key} needs an integer, got {value!r}", line_no
                ) from None
        elif section == "spec-f":
            if spec_f is not None:
                raise ScriptError("the facilitator section holds one row", line_no)
            spec_f = _parse_rule(line, COMPARATOR_PARAMS, line_no, "comparator")
        elif section == "spec-mp":
            fields = [part.strip() for part in line.split("|")]
            if len(fields) != 5:
                raise ScriptError(
                    "protocol rows have five fields: "
                    "memory | chunk | init | update | source",
                    line_no,
                )
            memory_id, chunk_field, init_field, update_field, source = fields
            chunk_name, set_size = _parse_chunk_field(chunk_field, line_no)
            init_rule = (
                None
                if init_field == "-"
                else _parse_rule(init_field, INIT_PARAMS, line_no, "init rule")
            )
            update_rule = (
                None
                if update_field == "-"
                else _parse_rule(update_field, UPDATE_PARAMS, line_no, "update rule")
            )
            spec_mp.append(
                ProtocolRow(
                    memory_id=memory_id,
                    chunk_name=chunk_name,
                    init_rule=init_rule,
                    update_rule=update_rule,
                    update_source=source,
                    set_size=set_size,
                )
            )
        elif section == "spec-g":
            fields = [part.strip() for part in line.split("|")]
            if len(fields) != 4:
                raise ScriptError(
                    "heuristic rows have four fields: id | rule | inputs | output",
                    line_no,
                )
            id_g, rule_field, inputs, output = fields
            rule = _parse_rule(rule_field, GENERATIVE_PARAMS, line_no,
                               "generating rule")
            spec_g.append(GenerativeRow(id_g, rule, _split_names(inputs), output))
        else:  # spec-mm
            fields = [part.strip() for part in line.split("|")]
            if len(fields) != 3:
                raise ScriptError(
                    "case rows have three fields: heuristic-id | updates | weight",
                    line_no,
                )
            id_g, updates, weight_field = fields
            try:
                weight = float(weight_field)
            except ValueError:
                raise ScriptError(
                    f"weight must be numeric, got {weight_field!r}", line_no
                ) from None
            assert case_id is not None
            spec_mm[case_id].append(
                ExecutiveRow(id_g, _split_names(updates), weight)
            )

    for key in ("N", "T"):
        if key not in params:
            raise ScriptError(f"missing overall parameter {key} in [params]")
    for name in ("spec-f", "spec-mp", "spec-g"):
        if (name == "spec-f" and spec_f is None) or (
            name != "spec-f" and name not in seen
        ):
            raise ScriptError(f"missing section [{name}]")
    assert spec_f is not None
    return Script(
        params=params,
        spec_f=spec_f,
        spec_mp=tuple(spec_mp),
        spec_g=tuple(spec_g),
        spec_mm={case: tuple(rows) for case, rows in spec_mm.items()},
    )


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _chunk_field(row: ProtocolRow) -> str:
    if row.set_size is None:
        return row.chunk_name
    return f"{row.chunk_name} size={row.set_size}"


def serialize(script: Script) -> str:
    """Canonical text form; ``parse(serialize(s))`` equals ``s``."""
    out: list[str] = ["[params]"]
    for key, value in script.params.items():
        out.append(f"{key} = {value}")
    out += ["", "[spec-f]", str(script.spec_f), "", "[spec-mp]"]
    for row in script.spec_mp:
        out.append(
            " | ".join(
                (
                    row.memory_id,
                    _chunk_field(row),
                    "-" if row.init_rule is None else str(row.init_rule),
                    "-" if row.update_rule is None else str(row.update_rule),
                    row.update_source,
                )
            )
        )
    out += ["", "[spec-g]"]
    for gen in script.spec_g:
        out.append(
            " | ".join(
                (
                    gen.id_g,
                    str(gen.rule),
                    ", ".join(gen.e_ig) if gen.e_ig else "-",
                    gen.ch_og,
                )
            )
        )
    for case, rows in script.spec_mm.items():
        out += ["", f"[spec-mm {case}]"]
        for row in rows:
            weight = row.c_w
            weight_text = str(int(weight)) if weight == int(weight) else repr(weight)
            out.append(
                " | ".join(
                    (
                        row.id_g,
                        ", ".join(row.e_upd) if row.e_upd else "-",
                        weight_text,
                    )
                )
            )
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


def _check_params(
    rule: RuleInstance,
    required: Mapping[str, tuple[str, ...]],
    code: str,
    owner: str,
    diagnostics: list[Diagnostic],
) -> None:
    expected = required.get(rule.kind)
    if expected is None:
        diagnostics.append(
            Diagnostic(code, f"{owner}: unknown rule kind {rule.kind!r}")
        )
        return
    have = set(rule.params)
    want = set(expected)
    if have != want:
        missing = sorted(want - have)
        extra = sorted(have - want)
        parts = []
        if missing:
            parts.append(f"missing {', '.join(missing)}")
        if extra:
            parts.append(f"unexpected {', '.join(extra)}")
        diagnostics.append(
            Diagnostic(
                code,
                f"{owner}: {rule.kind} takes ({', '.join(expected)}); "
                + "; ".join(parts),
            )
        )


def validate(script: Script) -> list[Diagnostic]:
    """Check all four layers; returns every violation found (empty = valid)."""
    diagnostics: list[Diagnostic] = []

    for key in ("N", "T"):
        if script.params.get(key, 0) < 1:
            diagnostics.append(
                Diagnostic("P-RANGE", f"overall parameter {key} must be >= 1")
            )

    _check_params(script.spec_f, COMPARATOR_PARAMS, "F-PARAMS",
                  "facilitator", diagnostics)

    diagnostics.extend(validate_protocol(script.spec_mp))

    by_name = {row.chunk_name: row for row in script.spec_mp}
    genuine = {
        row.chunk_name
        for row in script.spec_mp
        if row.memory_id in ("M_A", "M_SG")
    }
    graph = build_updatable_graph(script.spec_mp)

    feedback = script.spec_f.params.get("C_FB")
    if feedback is not None and (
        not isinstance(feedback, str)
        or feedback not in by_name
        or not is_set_chunk(feedback)
    ):
        diagnostics.append(
            Diagnostic(
                "F-FEEDBACK",
                f"facilitator feedback chunk {feedback!r} must name a declared "
                "set chunk",
            )
        )

    ids_seen: set[str] = set()
    for gen in script.spec_g:
        if gen.id_g in ids_seen:
            diagnostics.append(
                Diagnostic(
                    "G-DUPLICATE-ID",
                    f"heuristic id {gen.id_g!r} is declared more than once",
                )
            )
        ids_seen.add(gen.id_g)
        _check_params(gen.rule, GENERATIVE_PARAMS, "G-PARAMS", gen.id_g,
                      diagnostics)

        unknown = [name for name in gen.e_ig if name not in by_name]
        if unknown:
            diagnostics.append(
                Diagnostic(
                    "G-UNKNOWN-CHUNK",
                    f"{gen.id_g}: input chunk(s) {', '.join(unknown)} are not "
                    "declared in the memory protocol",
                )
            )
        signature = GENERATIVE_INPUTS.get(gen.rule.kind)
        if signature is not None:
            shapes = tuple(is_set_chunk(name) for name in gen.e_ig)
            if shapes != signature:
                want = ", ".join("set" if s else "state" for s in signature)
                got = ", ".join("set" if s else "state" for s in shapes)
                diagnostics.append(
                    Diagnostic(
                        "G-SIGNATURE",
                        f"{gen.id_g}: {gen.rule.kind} consumes ({want or 'nothing'}), "
                        f"but inputs are ({got or 'nothing'})",
                    )
                )
        if gen.ch_og in by_name or is_set_chunk(gen.ch_og):
            diagnostics.append(
                Diagnostic(
                    "G-OUTPUT-NOT-ROOT",
                    f"{gen.id_g}: output {gen.ch_og!r} must be a fresh single-"
                    "state chunk outside long-term memory",
                )
            )
        elif not unknown:
            _check_subtree(gen, graph, diagnostics)

    for case, rows in script.spec_mm.items():
        known_rows = [row for row in rows if row.id_g in ids_seen]
        for row in rows:
            if row.id_g not in ids_seen:
                diagnostics.append(
                    Diagnostic(
                        "MM-UNKNOWN-ESH",
                        f"case {case}: row references undeclared heuristic "
                        f"{row.id_g!r}",
                    )
                )
            if row.c_w < 0:
                diagnostics.append(
                    Diagnostic(
                        "MM-WEIGHT-NEGATIVE",
                        f"case {case}: weight of {row.id_g} must be >= 0",
                    )
                )
        gen_by_id = {gen.id_g: gen for gen in script.spec_g}
        e_igm: set[str] = set()
        for row in known_rows:
            e_igm |= {n for n in gen_by_id[row.id_g].e_ig if n in genuine}
        for row in known_rows:
            e_igg = {n for n in gen_by_id[row.id_g].e_ig if n in genuine}
            e_upd = set(row.e_upd)
            missing = sorted(e_igg - e_upd)
            if missing:
                diagnostics.append(
                    Diagnostic(
                        "MM-UPD-SUBSET",
                        f"case {case}, row {row.id_g}: every genuine input chunk "
                        "of the heuristic must be actively updated, but "
                        f"{', '.join(missing)} are missing from its updates",
                    )
                )
            extra = sorted(e_upd - e_igm)
            if extra:
                diagnostics.append(
                    Diagnostic(
                        "MM-UPD-SUPERSET",
                        f"case {case}, row {row.id_g}: updates may only name "
                        "genuine input chunks of the case's heuristics, but "
                        f"{', '.join(extra)} are outside that union",
                    )
                )
        if rows and sum(row.c_w for row in rows) <= 0:
            diagnostics.append(
                Diagnostic(
                    "MM-ZERO-WEIGHT",
                    f"case {case}: total selection weight must be positive "
                    "(no selectable row otherwise)",
                )
            )
    return diagnostics


def _check_subtree(
    gen: GenerativeRow, graph, diagnostics: list[Diagnostic]
) -> None:
    """Inputs plus output must induce a connected subtree holding one root."""
    members = set(gen.e_ig) | {gen.ch_og}
    roots = members & graph.roots
    if len(roots) != 1:
        diagnostics.append(
            Diagnostic(
                "G-SUBTREE",
                f"{gen.id_g}: inputs and output must contain exactly one root "
                f"of the updatable graph, found {len(roots)}",
            )
        )
        return
    # Undirected connectivity over graph edges restricted to the member set.
    adjacency: dict[str, set[str]] = {name: set() for name in members}
    for child, parent in graph.parent.items():
        if child in members and parent in members:
            adjacency[child].add(parent)
            adjacency[parent].add(child)
    stack = [next(iter(members))]
    reached: set[str] = set()
    while stack:
        node = stack.pop()
        if node in reached:
            continue
        reached.add(node)
        stack.extend(adjacency[node] - reached)
    if reached != members:
        stranded = sorted(members - reached)
        diagnostics.append(
            Diagnostic(
                "G-SUBTREE",
                f"{gen.id_g}: inputs and output must form a connected subtree "
                f"of the updatable graph; {', '.join(stranded)} are not "
                "connected to the rest",
            )
        )


# --------------------------------------------------------------------------
# Case resolution and loading
# --------------------------------------------------------------------------


def resolve_case(script: Script, id_c: str) -> RunnableCase:
    """Look up a case (``#`` prefix optional) and normalize its weights."""
    case_id = id_c if id_c in script.spec_mm else f"#{id_c}"
    if case_id not in script.spec_mm:
        available = ", ".join(script.spec_mm) or "none"
        raise ScriptError(f"unknown case {id_c!r}; available: {available}")
    gen_by_id = {gen.id_g: gen for gen in script.spec_g}
    rows = [
        ActiveRow(gen_by_id[row.id_g], row.e_upd, row.c_w)
        for row in script.spec_mm[case_id]
        if row.c_w > 0
    ]
    if not rows:
        raise ScriptError(f"case {case_id} has no selectable row")
    total = sum(row.weight for row in rows)
    cumulative: list[float] = []
    acc = 0.0
    for row in rows:
        acc += row.weight / total
        cumulative.append(acc)
    cumulative[-1] = 1.0
    return RunnableCase(case_id, tuple(rows), tuple(cumulative))


def override_facilitator(script: Script, **params: float | str) -> Script:
    """A copy of the script with some facilitator parameters replaced."""
    merged = dict(script.spec_f.params)
    for key, value in params.items():
        if key not in merged:
            raise ScriptError(
                f"facilitator {script.spec_f.kind} has no parameter {key!r}"
            )
        merged[key] = value
    return replace(script, spec_f=RuleInstance(script.spec_f.kind, merged))


def reference_script_path() -> Path:
    """Filesystem path of the bundled reference script."""
    return Path(str(resources.files("cogopt").joinpath("data/reference.cgo")))


def load_script(path: str | Path) -> Script:
    """Read and parse a script file."""
    return parse(Path(path).read_text(encoding="utf-8"))
