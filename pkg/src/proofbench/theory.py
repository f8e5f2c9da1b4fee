"""Data-driven theory store: atom signatures, constants, disjunction
definitions, type table and the axiom/theorem rule store.

A theory is wholly defined by three text files: a ``manifest`` (atoms,
constants, type table), an ``axiom.dat`` (rule blocks in the visual
premise/dashes/conclusion layout) and an optional ``disjunctions`` file.
Bundled theories live under ``proofbench/data/theories``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources

from . import model
from .equivalence import io_match
from .model import (
    MachParams,
    ParseError,
    Program,
    Statement,
    free_variables,
    io_names,
    parse_statement,
    unique,
    validate_program,
)

FALSE = ":false"

AUTOMATED_LABELS = ("aio", "sr1", "sr2", "disj")


@dataclass(frozen=True)
class AtomicSignature:
    name: str
    kind: str  # chck | asgn | tasgn
    input_types: tuple[str, ...]
    output_types: tuple[str, ...]
    substitutable: bool = False
    hook: str | None = None

    def __post_init__(self):
        if self.kind not in ("chck", "asgn", "tasgn"):
            raise ValueError(f"bad atom kind {self.kind!r}")
        if self.kind in ("chck", "tasgn") and self.output_types:
            raise ValueError(f"{self.name}: {self.kind} atoms have empty outputs")
        if self.kind == "asgn" and not self.output_types:
            raise ValueError(f"{self.name}: asgn atoms need at least one output")


@dataclass(frozen=True)
class DisjunctionDef:
    name: str
    formal: Statement
    operands: tuple[Program, ...]


@dataclass(frozen=True)
class RuleRecord:
    label: str
    kind: str  # axiom | lemma | theorem; a None conclusion marks a falsity rule
    premise: Program
    conclusion: Statement | None  # None encodes a :false conclusion
    tcl: tuple[str, ...] = ()

    @property
    def is_falsity(self) -> bool:
        return self.conclusion is None

    def serialize(self) -> str:
        head = {"axiom": "Axiom", "lemma": "Lemma", "theorem": "Theorem"}[self.kind]
        lines = [f"{head} {self.label}.", ""]
        body = [s.serialize() for s in self.premise]
        concl = FALSE if self.conclusion is None else self.conclusion.serialize()
        width = max(len(x) for x in body + [concl]) + 1
        lines += body + ["-" * width, concl]
        return "\n".join(lines)


class TheoryError(ValueError):
    pass


@dataclass
class Theory:
    name: str
    mach: MachParams
    atoms: dict[str, AtomicSignature] = field(default_factory=dict)
    constants: dict[str, str] = field(default_factory=dict)  # name -> typed literal
    disjunctions: dict[str, DisjunctionDef] = field(default_factory=dict)
    type_table: dict[str, tuple[str, str]] = field(default_factory=dict)
    rules: dict[str, RuleRecord] = field(default_factory=dict)
    hooks: dict[str, object] = field(default_factory=dict)  # hook key -> callable

    # -- lookups ------------------------------------------------------------

    def signature(self, name: str) -> AtomicSignature:
        try:
            return self.atoms[name]
        except KeyError:
            raise TheoryError(f"unknown atom {name!r} in theory {self.name}")

    def is_constant(self, token: str) -> bool:
        return token in self.constants or model.is_numeric(token)

    @property
    def constant_names(self):
        return tuple(self.constants)

    @property
    def numeric_constants(self):
        return tuple(c for c in self.constants if model.is_numeric(c))

    def check_atom_for(self, semantic_type: str) -> str | None:
        entry = self.type_table.get(semantic_type)
        return entry[0] if entry else None

    def eq_atom_for(self, semantic_type: str) -> str | None:
        entry = self.type_table.get(semantic_type)
        return entry[1] if entry else None

    def input_type(self, atom: str, position: int) -> str | None:
        sig = self.atoms.get(atom)
        if sig and position < len(sig.input_types):
            return sig.input_types[position]
        return None

    def output_type(self, atom: str, position: int) -> str | None:
        sig = self.atoms.get(atom)
        if sig and position < len(sig.output_types):
            return sig.output_types[position]
        return None

    def rules_of_kind(self, *kinds) -> list[RuleRecord]:
        return [r for r in self.rules.values() if r.kind in kinds]

    @property
    def falsity_rules(self) -> list[RuleRecord]:
        return [r for r in self.rules.values() if r.is_falsity]

    def matches_registered_falsity(self, program: Program) -> bool:
        """True when some falsity rule's premise matches the whole program."""
        for rule in self.falsity_rules:
            if len(rule.premise) != len(program):
                continue
            if io_match(program, rule.premise, self.constant_names):
                return True
        return False

    # -- mutation (single writer) --------------------------------------------

    def store_rule(self, record: RuleRecord) -> None:
        if record.label in self.rules:
            raise TheoryError(f"duplicate label {record.label!r}")
        self._validate_rule(record)
        self.rules[record.label] = record

    def relabel(self, label: str, kind: str, tcl=()) -> None:
        rule = self.rules.get(label)
        if rule is None:
            raise TheoryError(f"unknown label {label!r}")
        self.rules[label] = replace(rule, kind=kind, tcl=tuple(tcl))

    def remove_rule(self, label: str) -> None:
        if label not in self.rules:
            raise TheoryError(f"unknown label {label!r}")
        del self.rules[label]

    def _validate_rule(self, record: RuleRecord) -> None:
        if len(record.premise) > self.mach.nprem:
            raise TheoryError(f"{record.label}: premise longer than nprem")
        for stmt in record.premise + (
            (record.conclusion,) if record.conclusion else ()
        ):
            if stmt.name not in self.atoms:
                raise TheoryError(f"{record.label}: unknown atom {stmt.name!r}")
        issues = validate_program(record.premise, self.constant_names)
        if issues:
            raise TheoryError(f"{record.label}: bad premise: {issues[0]}")
        full = record.premise + ((record.conclusion,) if record.conclusion else ())
        bad = model.literal_issues(full, self.numeric_constants)
        if bad:
            raise TheoryError(f"{record.label}: {bad[0]}")
        if record.conclusion is not None:
            scope = set(io_names(record.premise)) | set(self.constant_names)
            for token in record.conclusion.inputs:
                if token not in scope and not model.is_numeric(token):
                    raise TheoryError(
                        f"{record.label}: conclusion input {token!r} not bound by premise"
                    )

    def with_hooks(self, extra_hooks: dict) -> "Theory":
        """Shallow copy with additional evaluator hooks (e.g. a bound system)."""
        clone = replace(self)
        clone.atoms = dict(self.atoms)
        clone.rules = dict(self.rules)
        clone.hooks = dict(self.hooks)
        clone.hooks.update(extra_hooks)
        return clone

    def snapshot_labels(self) -> tuple[str, ...]:
        return tuple(self.rules)


# ---------------------------------------------------------------------------
# File formats.

_HEADER_RE = re.compile(r"(Axiom|Theorem|Lemma)\s+(\S+)\.\s*\Z")


def parse_rule_blocks(text: str) -> list[tuple[str, str, list[str], str]]:
    """Split an axiom.dat/theorem.dat image into (kind, label, premise, conclusion)."""
    blocks = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        m = _HEADER_RE.match(line)
        if not m:
            raise ParseError(f"expected rule header, got {line!r}")
        kind, label = m.group(1).lower(), m.group(2)
        i += 1
        premise, conclusion, seen_dash = [], None, False
        while i < len(lines):
            row = lines[i].strip()
            if not row:
                if conclusion is not None:
                    break
                i += 1
                continue
            if _HEADER_RE.match(row):
                break
            if set(row) == {"-"} and len(row) >= 3:
                seen_dash = True
            elif not seen_dash:
                premise.append(row)
            else:
                if conclusion is not None:
                    raise ParseError(f"{label}: multiple conclusion lines")
                conclusion = row
            i += 1
        if not seen_dash or conclusion is None:
            raise ParseError(f"{label}: missing separator or conclusion")
        blocks.append((kind, label, premise, conclusion))
    return blocks


def parse_rule_record(kind, label, premise_lines, conclusion_line, mach) -> RuleRecord:
    premise = tuple(parse_statement(t, mach) for t in premise_lines)
    if conclusion_line == FALSE:
        return RuleRecord(label, kind, premise, None)
    return RuleRecord(label, kind, premise, parse_statement(conclusion_line, mach))


def parse_disjunction_line(line: str, mach) -> DisjunctionDef:
    head, _, body = line.partition("=")
    formal = parse_statement(head.strip(), mach)
    operands = tuple(
        _parse_operand(part.strip(), mach) for part in body.split("|")
    )
    if len(operands) < 2:
        raise ParseError(f"disjunction {formal.name} needs two operands")
    return DisjunctionDef(formal.name, formal, operands)


def _parse_operand(text: str, mach) -> Program:
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1].strip()
    stmts = []
    while text:
        stmt, text = model.scan_statement(text, mach)
        stmts.append(stmt)
    return tuple(stmts)


def _check_disjunction(d: DisjunctionDef, theory: Theory) -> None:
    formal_free = set(d.formal.inputs) - set(theory.constant_names)
    for op in d.operands:
        free = set(free_variables(op, theory.constant_names))
        if free != formal_free:
            raise TheoryError(
                f"disjunction {d.name}: operand free inputs {sorted(free)} "
                f"differ from formal inputs {sorted(formal_free)}"
            )
        all_in = [x for s in op for x in s.inputs]
        primary_out = [y for s in op for y in s.outputs if y not in all_in]
        if tuple(primary_out) != d.formal.outputs:
            raise TheoryError(
                f"disjunction {d.name}: operand outputs {primary_out} "
                f"differ from formal outputs {list(d.formal.outputs)}"
            )


def parse_manifest(text: str, theory: Theory) -> None:
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "atom":
            name, kind, ins, outs = fields[1:5]
            flags = fields[5:]
            sig = AtomicSignature(
                name,
                kind,
                tuple(ins.split(",")) if ins != "-" else (),
                tuple(outs.split(",")) if outs != "-" else (),
                substitutable="sub" in flags,
                hook=next(
                    (f.split("=", 1)[1] for f in flags if f.startswith("hook=")), None
                ),
            )
            theory.atoms[name] = sig
        elif fields[0] == "const":
            name, semtype = fields[1], fields[2]
            literal = line.split(None, 3)[3] if len(fields) > 3 else "-"
            theory.constants[name] = f"{semtype} {literal.strip()}"
        elif fields[0] == "type":
            semtype = fields[1]
            entries = dict(f.split("=", 1) for f in fields[2:])
            theory.type_table[semtype] = (entries["check"], entries["eq"])
        else:
            raise ParseError(f"bad manifest directive: {line!r}")


def constant_type(theory: Theory, token: str) -> str | None:
    """Semantic type of a constant token, numeric literals included."""
    if model.is_numeric(token):
        # numeric literals take the theory's scalar type, if it has one
        for t in ("int", "rat"):
            if t in theory.type_table:
                return t
        return None
    entry = theory.constants.get(token)
    return entry.split()[0] if entry else None


def load_theory_dir(path, mach: MachParams | None = None, hooks=None) -> Theory:
    """Load a theory from a directory of manifest / axiom.dat / disjunctions."""
    mach = mach or MachParams()
    name = getattr(path, "name", str(path))
    theory = Theory(name=name, mach=mach, hooks=dict(hooks or {}))
    parse_manifest((path / "manifest").read_text(), theory)
    disj_path = path / "disjunctions"
    if _exists(disj_path):
        for raw in disj_path.read_text().splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            d = parse_disjunction_line(line, mach)
            if d.name not in theory.atoms:
                raise TheoryError(f"disjunction {d.name} has no atom signature")
            theory.disjunctions[d.name] = d
            _check_disjunction(d, theory)
    for kind, label, prem, concl in parse_rule_blocks((path / "axiom.dat").read_text()):
        theory.store_rule(parse_rule_record(kind, label, prem, concl, mach))
    thm_path = path / "theorem.dat"
    if _exists(thm_path):
        for kind, label, prem, concl in parse_rule_blocks(thm_path.read_text()):
            theory.store_rule(parse_rule_record(kind, label, prem, concl, mach))
    return theory


def _exists(path) -> bool:
    try:
        return path.is_file()
    except OSError:
        return False


def bundled_theory_names() -> list[str]:
    root = resources.files("proofbench").joinpath("data/theories")
    return sorted(p.name for p in root.iterdir() if p.is_dir())


def load_bundled(name: str, mach: MachParams | None = None) -> Theory:
    from . import evaluator

    root = resources.files("proofbench").joinpath("data/theories")
    path = root.joinpath(name)
    if not path.is_dir():
        raise TheoryError(f"no bundled theory {name!r}")
    return load_theory_dir(path, mach, hooks=evaluator.default_hooks())


def corpus_files(theory_name: str) -> list:
    root = resources.files("proofbench").joinpath("data/corpus").joinpath(theory_name)
    if not root.is_dir():
        return []
    return sorted(root.iterdir(), key=lambda p: _corpus_key(p.name))


def _corpus_key(filename: str):
    m = re.match(r"(lem|thm)(\d+)", filename)
    if not m:
        return (2, 0, filename)
    return (0 if m.group(1) == "lem" else 1, int(m.group(2)), filename)
