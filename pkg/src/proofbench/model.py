"""Program data model: statements, program lists and the machine envelope.

A formal statement is a single line ``name [inputs] [outputs]``.  Programs
are ordered statement lists subject to the single-assignment discipline:
output names are globally distinct and an input may only refer to a
constant or to a name introduced no later than its own line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

NAME_RE = re.compile(r"[a-z][a-z0-9]*\Z")
NUMERIC_RE = re.compile(r"[+-]?[0-9]+\Z")


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class MachParams:
    """Bounded-machine envelope every theory lives in."""

    nchar: int = 41
    nstr: int = 16
    nlst: int = 256
    nint: int = 1000
    nprem: int = 16
    tcpu: int = 1_000_000
    eps_denom: int = 3

    def __post_init__(self):
        for name in ("nchar", "nstr", "nlst", "nint", "nprem", "tcpu", "eps_denom"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.nprem > self.nlst:
            raise ValueError("nprem must not exceed nlst")

    @property
    def eps(self) -> float:
        return 10.0 ** (-self.eps_denom)

    def replace(self, **kw) -> "MachParams":
        from dataclasses import replace

        return replace(self, **kw)


def is_numeric(token: str) -> bool:
    return bool(NUMERIC_RE.match(token))


def is_variable(token: str) -> bool:
    return bool(NAME_RE.match(token))


def check_token(token: str, mach: MachParams | None = None) -> str:
    if mach is not None and len(token) > mach.nstr:
        raise ParseError(f"token longer than nstr: {token!r}")
    if is_numeric(token):
        if mach is not None and abs(int(token)) > mach.nint:
            raise ParseError(f"numeric literal exceeds nint: {token}")
        return token
    if not is_variable(token):
        raise ParseError(f"illegal token: {token!r}")
    return token


@dataclass(frozen=True)
class Statement:
    """One formal line ``name [i1 ... im] [o1 ... on]``."""

    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def serialize(self) -> str:
        return f"{self.name} {_render(self.inputs)} {_render(self.outputs)}"

    def __str__(self) -> str:
        return self.serialize()

    def tokens(self) -> tuple[str, ...]:
        return self.inputs + self.outputs


def _render(tokens) -> str:
    return "[" + " ".join(tokens) + "]" if tokens else "[ ]"


Program = tuple[Statement, ...]


def parse_statement(text: str, mach: MachParams | None = None) -> Statement:
    """Parse a single statement line; ``[ ]`` is the empty list."""
    stmt, rest = scan_statement(text, mach)
    if rest:
        raise ParseError(f"trailing tokens after statement: {rest!r}")
    return stmt


def scan_statement(text: str, mach: MachParams | None = None) -> tuple[Statement, str]:
    """Parse a statement off the front of `text`; returns (statement, remainder).

    The remainder is used by proof files, where a justification column
    follows the statement on the same line.
    """
    tokens = text.split()
    if not tokens:
        raise ParseError("empty statement")
    name = tokens[0]
    if not is_variable(name):
        raise ParseError(f"illegal name token: {name!r}")
    if mach is not None and len(name) > mach.nstr:
        raise ParseError(f"name longer than nstr: {name!r}")
    lists, pos = [], 1
    for _ in range(2):
        group, pos = _scan_bracket_group(tokens, pos, text)
        lists.append(tuple(check_token(t, mach) for t in group))
    inputs, outputs = lists
    stmt = Statement(name, inputs, outputs)
    _check_statement(stmt)
    return stmt, " ".join(tokens[pos:])


def _scan_bracket_group(tokens, pos, text):
    group = []
    if pos >= len(tokens):
        raise ParseError(f"expected two bracketed lists: {text!r}")
    tok = tokens[pos]
    if not tok.startswith("["):
        raise ParseError(f"expected '[' in {text!r}")
    tok = tok[1:]
    pos += 1
    while True:
        if tok.endswith("]"):
            tok = tok[:-1]
            if tok:
                group.append(tok)
            return group, pos
        if tok:
            group.append(tok)
        if pos >= len(tokens):
            raise ParseError(f"unterminated bracket list in {text!r}")
        tok = tokens[pos]
        pos += 1
        if "[" in tok:
            raise ParseError(f"malformed brackets in {text!r}")


def _check_statement(stmt: Statement) -> None:
    outs = stmt.outputs
    if len(set(outs)) != len(outs):
        raise ParseError(f"repeated output variable in {stmt.serialize()!r}")
    for o in outs:
        if is_numeric(o):
            raise ParseError(f"numeric literal as output in {stmt.serialize()!r}")
    if set(stmt.inputs) & set(outs):
        raise ParseError(f"input/output name clash in {stmt.serialize()!r}")


def parse_program(text: str, mach: MachParams | None = None) -> Program:
    return tuple(
        parse_statement(line, mach) for line in text.splitlines() if line.strip()
    )


def serialize_program(program: Program) -> str:
    return "\n".join(s.serialize() for s in program)


# ---------------------------------------------------------------------------
# List utilities with the order-preserving, first-occurrence-kept semantics
# shared by everything downstream.


def unique(items):
    seen, out = set(), []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def setminus(items, remove):
    drop = set(remove)
    return [x for x in items if x not in drop]


def intersection(items, other):
    keep = set(other)
    return [x for x in items if x in keep]


def substitute_element(items, position: int, replacement):
    out = list(items)
    out[position] = replacement
    return out


# ---------------------------------------------------------------------------
# Structural validation and variable classification.


@dataclass(frozen=True)
class Issue:
    code: str
    token: str
    lines: tuple[int, ...] = ()

    def __str__(self) -> str:
        where = f" (lines {' '.join(map(str, self.lines))})" if self.lines else ""
        return f"{self.code}: {self.token}{where}"


def validate_program(
    program: Program,
    constants=(),
    known_names=None,
    nlst: int | None = None,
) -> list[Issue]:
    """Check the program-list conditions; returns a (possibly empty) issue list.

    Repeated identical statements with empty outputs are legal; anything
    else that reuses an output name is a DuplicateOutput.  An input naming
    an output of the same or a later line is a ForwardBinding.
    """
    issues = []
    consts = set(constants)
    if nlst is not None and len(program) > nlst:
        issues.append(Issue("TooLong", str(len(program))))
    owners: dict[str, int] = {}
    for k, stmt in enumerate(program, start=1):
        if known_names is not None and stmt.name not in known_names:
            issues.append(Issue("UnknownName", stmt.name, (k,)))
        for o in stmt.outputs:
            if o in consts:
                issues.append(Issue("ConstantAsOutput", o, (k,)))
            if o in owners:
                issues.append(Issue("DuplicateOutput", o, (owners[o], k)))
            else:
                owners[o] = k
    for k, stmt in enumerate(program, start=1):
        for x in stmt.inputs:
            bound_at = owners.get(x)
            if bound_at is not None and bound_at >= k:
                issues.append(Issue("ForwardBinding", x, (k, bound_at)))
    return issues


def literal_issues(program: Program, allowed_numerics) -> list[Issue]:
    """Numeric literals are only legal when registered as constants."""
    allowed = set(allowed_numerics)
    issues = []
    for k, stmt in enumerate(program, start=1):
        for tok in stmt.inputs:
            if is_numeric(tok) and tok not in allowed:
                issues.append(Issue("UnregisteredLiteral", tok, (k,)))
    return issues


def repeated_check_warnings(program: Program) -> list[Issue]:
    """Repetition of empty-output statements is allowed but worth flagging."""
    seen, out = {}, []
    for k, stmt in enumerate(program, start=1):
        if not stmt.outputs:
            if stmt in seen:
                out.append(Issue("RepeatedStatement", stmt.serialize(), (seen[stmt], k)))
            else:
                seen[stmt] = k
    return out


def primary_inputs(program: Program) -> list[str]:
    """Input names never bound to an output, deduplicated in first-use order."""
    all_inputs = [x for s in program for x in s.inputs]
    all_outputs = [y for s in program for y in s.outputs]
    return unique(setminus(all_inputs, all_outputs))


def free_variables(program: Program, constants=()) -> list[str]:
    return unique(setminus(primary_inputs(program), constants))


def io_names(program: Program) -> list[str]:
    return unique([t for s in program for t in s.tokens()])


class NameClash(ValueError):
    def __init__(self, tokens):
        self.tokens = list(tokens)
        super().__init__(f"output names already in use: {' '.join(self.tokens)}")


def concat(p: Program, q: Program, constants=()) -> Program:
    """Concatenate two programs; the second may not rebind names of the first."""
    clash = set(y for s in q for y in s.outputs) & set(io_names(p))
    if clash:
        raise NameClash(sorted(clash))
    result = tuple(p) + tuple(q)
    issues = validate_program(result, constants)
    if issues:
        raise NameClash([str(i) for i in issues])
    return result


def fresh_names(count: int, used, constants=()) -> list[str]:
    """Deterministic fresh-name stream: a..z then a1, b1, ... amid collisions."""
    taken = set(used) | set(constants)
    out = []
    suffix = 0
    while len(out) < count:
        for ch in "abcdefghijklmnopqrstuvwxyz":
            name = ch if suffix == 0 else f"{ch}{suffix}"
            if name not in taken:
                taken.add(name)
                out.append(name)
                if len(out) == count:
                    return out
        suffix += 1
    return out
