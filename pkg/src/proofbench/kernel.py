"""Batch proof verification, connection-list reduction and theorem
extraction.

A proof script is the visual layout used throughout the bundled corpus: a
``Theorem``/``Lemma`` header, the stated premise block over a dashed
separator and conclusion, then a ``Proof.`` section of numbered lines.
Each derived line carries a justification: a stored rule label with a
connection list of cited line numbers, one of the automated families
(``aio``, ``sr1``, ``sr2``), or ``disj`` with the two branch rule labels.

Verification re-derives every line.  Reduction then walks the connection
lists backwards from the conclusion; lines never reached are redundant,
and extraction refuses while any exist.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import engine
from .engine import match_assignments
from .equivalence import instantiate, Substitution
from . import model
from .model import (
    ParseError,
    Statement,
    intersection,
    io_names,
    parse_statement,
    setminus,
    unique,
    validate_program,
)
from .theory import AUTOMATED_LABELS, FALSE, RuleRecord, Theory

_HEADER_RE = re.compile(r"(Theorem|Lemma)\s+(\S+)\.\s*\Z")
_LINE_RE = re.compile(r"\s*(\d+)\s+(.*\S)\s*\Z")


@dataclass
class ProofLine:
    number: int
    statement: Statement | None  # None encodes :false
    star: bool = False
    label: str | None = None
    connections: tuple = ()  # ints, or rule labels for disj
    deps: tuple[int, ...] = ()  # effective line dependencies, set by checking

    @property
    def is_premise(self) -> bool:
        return self.label is None


@dataclass
class ProofScript:
    kind: str  # theorem | lemma
    label: str
    stated_premise: tuple[Statement, ...]
    stated_conclusion: Statement | None
    lines: list[ProofLine]
    source: str = ""

    @property
    def premise_count(self) -> int:
        return sum(1 for ln in self.lines if ln.is_premise)

    def cited_rule_labels(self) -> list[str]:
        labels = []
        for ln in self.lines:
            if ln.label is None:
                continue
            if ln.label == "disj":
                labels.extend([c for c in ln.connections if isinstance(c, str)])
            elif ln.label not in AUTOMATED_LABELS:
                labels.append(ln.label)
        return unique(labels)


@dataclass
class LineVerdict:
    number: int
    ok: bool
    message: str = ""


@dataclass
class VerificationReport:
    label: str
    verdicts: list[LineVerdict] = field(default_factory=list)
    support: list[int] = field(default_factory=list)
    redundant: list[int] = field(default_factory=list)
    record: RuleRecord | None = None
    remap: dict[int, int] | None = None

    @property
    def ok(self) -> bool:
        return all(v.ok for v in self.verdicts)

    def failure_lines(self) -> list[LineVerdict]:
        return [v for v in self.verdicts if not v.ok]


class ProofError(ValueError):
    pass


class RedundancyRefusal(ProofError):
    def __init__(self, redundant):
        self.redundant = list(redundant)
        super().__init__(f"redundant lines: {self.redundant}")


# ---------------------------------------------------------------------------
# Parsing.


def parse_proof(text: str, mach=None) -> ProofScript:
    lines = text.splitlines()
    i = 0
    while i < len(lines) and not lines[i].strip():
        i += 1
    m = _HEADER_RE.match(lines[i].strip()) if i < len(lines) else None
    if not m:
        raise ParseError("proof must start with a Theorem/Lemma header")
    kind, label = m.group(1).lower(), m.group(2)
    i += 1
    premise, conclusion, seen_dash = [], None, False
    while i < len(lines):
        row = lines[i].strip()
        i += 1
        if not row:
            continue
        if row == "Proof.":
            break
        if set(row) == {"-"} and len(row) >= 3:
            seen_dash = True
        elif not seen_dash:
            premise.append(parse_statement(row, mach))
        else:
            if conclusion is not None:
                raise ParseError(f"{label}: multiple conclusion lines")
            conclusion = None if row == FALSE else parse_statement(row, mach)
            seen_dash = "done"
    if not seen_dash:
        raise ParseError(f"{label}: missing premise/conclusion separator")
    proof_lines = []
    for raw in lines[i:]:
        if not raw.strip():
            continue
        lm = _LINE_RE.match(raw)
        if not lm:
            raise ParseError(f"{label}: bad proof line {raw!r}")
        proof_lines.append(_parse_proof_line(int(lm.group(1)), lm.group(2), mach))
    if not proof_lines:
        raise ParseError(f"{label}: empty proof body")
    return ProofScript(kind, label, tuple(premise), conclusion, proof_lines, text)


def _parse_proof_line(number: int, body: str, mach) -> ProofLine:
    if body.startswith(FALSE):
        stmt, rest = None, body[len(FALSE) :].strip()
    else:
        from .model import scan_statement

        stmt, rest = scan_statement(body, mach)
    star = False
    tokens = rest.split()
    if tokens and tokens[0] == "*":
        star = True
        tokens = tokens[1:]
    label, connections = None, ()
    if tokens:
        label = tokens[0]
        rest_text = " ".join(tokens[1:])
        if rest_text:
            m = re.match(r"\[([^]]*)\]\s*\Z", rest_text)
            if not m:
                raise ParseError(f"bad connection list in line {number}: {body!r}")
            connections = tuple(
                int(t) if t.isdigit() else t for t in m.group(1).split()
            )
    return ProofLine(number, stmt, star, label, connections)


def parse_proof_file(path, mach=None) -> ProofScript:
    return parse_proof(path.read_text(), mach)


# ---------------------------------------------------------------------------
# Per-line verification.


def _statements(lines: list[ProofLine]):
    return [ln.statement for ln in lines]


def _verify_stored(lines, upto, theory, label, connections, target):
    """Directed check of one stored-rule citation; returns effective deps."""
    rule = theory.rules.get(label)
    if rule is None:
        raise ProofError(f"UnknownLabel: {label}")
    if any(not isinstance(c, int) for c in connections):
        raise ProofError(f"BadConnectionList: {list(connections)}")
    if any(c < 1 or c >= upto for c in connections):
        raise ProofError(f"BadConnectionList: cited line out of range")
    if len(connections) != len(rule.premise):
        raise ProofError(
            f"BadConnectionList: {label} expects {len(rule.premise)} premises"
        )
    cited = []
    for c in connections:
        stmt = lines[c - 1].statement
        if stmt is None:
            raise ProofError(f"BadConnectionList: line {c} is a falsity line")
        cited.append(stmt)
    if rule.is_falsity:
        if target is not None:
            raise ProofError(f"{label} is a falsity rule; line must be {FALSE}")
        template, instance = list(rule.premise), cited
    else:
        if target is None:
            raise ProofError(f"{label} concludes a statement, not {FALSE}")
        template = list(rule.premise) + [rule.conclusion]
        instance = cited + [target]
    from .equivalence import io_match_or_raise, MatchFailure

    try:
        io_match_or_raise(instance, template, theory.constant_names)
    except MatchFailure as exc:
        raise ProofError(f"{label}: premise/conclusion mismatch ({exc})")
    return tuple(connections)


def _verify_automated(lines, upto, theory, label, connections, target):
    if target is None:
        raise ProofError(f"{label} cannot conclude {FALSE}")
    if any(not isinstance(c, int) or c < 1 or c >= upto for c in connections):
        raise ProofError("BadConnectionList: cited line out of range")
    prefix = _statements(lines)[: upto - 1]
    if label == "aio":
        pool = engine.aio_options(prefix, theory)
    else:
        pool = [o for o in engine.sr_options(prefix, theory) if o.label == label]
    for opt in pool:
        if opt.matches_step(target, label, connections):
            return tuple(connections)
    raise ProofError(f"{label} {list(connections)} does not yield {target}")


def _verify_disj(lines, upto, theory, connections, target):
    if len(connections) != 2 or any(isinstance(c, int) for c in connections):
        raise ProofError(f"BadConnectionList: disj cites two rule labels")
    label_a, label_b = connections
    stars = [ln.number for ln in lines[: upto - 1] if ln.star]
    if not stars:
        raise ProofError("disj citation without a starred split line")
    prefix = _statements(lines)[: upto - 1]
    last_error = "no starred line admits this contraction"
    for star in stars:
        try:
            programs = engine.operand_programs(prefix, star, theory)
        except engine.NotADisjunction as exc:
            last_error = str(exc)
            continue
        if len(programs) != 2:
            continue
        outcomes = []
        for program, label in zip(programs, (label_a, label_b)):
            shift = len(program) - len(prefix)
            got = _branch_outcomes(program, label, theory, target)
            if not got:
                outcomes = None
                last_error = f"branch rule {label} does not conclude here"
                break
            outcomes.append([(c, _map_deps(d, star, shift)) for c, d in got])
        if outcomes is None:
            continue
        for concl_a, deps_a in outcomes[0]:
            for concl_b, deps_b in outcomes[1]:
                if _contractable(concl_a, concl_b, target):
                    return tuple(unique([star] + sorted(deps_a + deps_b)))
        last_error = "branch conclusions do not combine to the stated line"
    raise ProofError(last_error)


def _branch_outcomes(program, label, theory, target):
    """(conclusion, cited-line-numbers) pairs a branch rule can justify."""
    out = []
    for opt in engine.branch_one_step(program, label, theory):
        numeric = tuple(c for c in opt.connections if isinstance(c, int))
        if opt.conclusion is None:
            out.append((None, numeric))
        elif target is not None and opt.matches_step(target, opt.label, opt.connections):
            out.append((opt.conclusion, numeric))
    return out


def _contractable(concl_a, concl_b, target) -> bool:
    if target is None:
        return concl_a is None and concl_b is None
    if concl_a is None and concl_b is None:
        return False
    return True  # each non-false side already matched the target


def _map_deps(deps, star, shift):
    """Map operand-program line numbers back onto the parent derivation."""
    out = []
    for d in deps:
        if d < star:
            out.append(d)
        elif d < star + shift + 1:
            out.append(star)
        else:
            out.append(d - shift)
    return out


# ---------------------------------------------------------------------------
# Whole-script verification.


def check_proof(script: ProofScript, theory: Theory) -> VerificationReport:
    report = VerificationReport(script.label)
    lines = script.lines

    structural = _structural_issues(script, theory)
    if structural:
        report.verdicts.append(LineVerdict(0, False, structural))
        return report

    for ln in lines:
        if ln.is_premise:
            ln.deps = ()
            report.verdicts.append(LineVerdict(ln.number, True, "premise"))
            continue
        try:
            if ln.label == "disj":
                ln.deps = _verify_disj(lines, ln.number, theory, ln.connections, ln.statement)
            elif ln.label in ("aio", "sr1", "sr2"):
                ln.deps = _verify_automated(
                    lines, ln.number, theory, ln.label, ln.connections, ln.statement
                )
            else:
                ln.deps = _verify_stored(
                    lines, ln.number, theory, ln.label, ln.connections, ln.statement
                )
            report.verdicts.append(LineVerdict(ln.number, True))
        except ProofError as exc:
            report.verdicts.append(LineVerdict(ln.number, False, str(exc)))

    if report.ok:
        final = lines[-1]
        if final.statement is not None:
            scope = set()
            for ln in lines:
                if ln.is_premise and ln.statement is not None:
                    scope.update(ln.statement.tokens())
            scope.update(theory.constant_names)
            loose = [
                t
                for t in final.statement.inputs
                if t not in scope and not _numeric(t)
            ]
            if loose:
                report.verdicts.append(
                    LineVerdict(
                        final.number,
                        False,
                        f"not a proof: conclusion inputs {loose} unreachable from premises",
                    )
                )
    if report.ok:
        support, redundant = reduce_connections(script)
        report.support, report.redundant = support, redundant
    return report


def _numeric(token):
    return token.lstrip("+-").isdigit() and token not in ("", "+", "-")


def _structural_issues(script: ProofScript, theory: Theory) -> str:
    lines = script.lines
    for expect, ln in enumerate(lines, start=1):
        if ln.number != expect:
            return f"line labels not contiguous at {ln.number}"
    seen_derived = False
    for ln in lines:
        if ln.is_premise and seen_derived:
            return f"premise line {ln.number} after derived lines"
        if not ln.is_premise:
            seen_derived = True
        for c in ln.connections:
            if isinstance(c, int) and c >= ln.number:
                return f"line {ln.number} cites a later line {c}"
    premises = [ln.statement for ln in lines if ln.is_premise]
    if tuple(premises) != tuple(script.stated_premise):
        return "stated premise block differs from proof premises"
    final = lines[-1]
    if final.statement is None:
        if script.stated_conclusion is not None:
            return "stated conclusion differs from final line"
    elif script.stated_conclusion is None:
        return "stated conclusion differs from final line"
    elif final.statement != script.stated_conclusion:
        return "stated conclusion differs from final line"
    program = tuple(ln.statement for ln in lines if ln.statement is not None)
    issues = validate_program(program, theory.constant_names, nlst=theory.mach.nlst)
    issues = [i for i in issues if i.code != "UnknownName"]
    issues += model.literal_issues(program, theory.numeric_constants)
    if issues:
        return f"derivation invalid: {issues[0]}"
    for stmt in program:
        if stmt.name not in theory.atoms:
            return f"unknown atom {stmt.name!r}"
    return ""


# ---------------------------------------------------------------------------
# Connection-list reduction and extraction.


def reduce_connections(script: ProofScript) -> tuple[list[int], list[int]]:
    """Trace the conclusion back through connection lists.

    Returns (premise support, redundancy list).  The support ends as a
    subset of the premise labels; the redundancy list holds every premise
    and derived line the walk never visits.
    """
    lines = script.lines
    m = len(lines)
    n = script.premise_count
    deps = {ln.number: list(ln.deps) for ln in lines}
    b = unique(deps[m])
    r = list(range(1, n + 1))
    for i in range(m - 1, 0, -1):
        if i in b:
            if i > n:
                b = unique(setminus(b, [i]) + deps[i])
        elif i not in r:
            r.append(i)
    r = setminus(r, b)
    return sorted(b), sorted(r)


def extract_theorem(
    script: ProofScript, theory: Theory, force: bool = False
) -> tuple[RuleRecord, VerificationReport]:
    """Extract the rule [premises -> conclusion]; refuses on redundancy."""
    report = check_proof(script, theory)
    if not report.ok:
        bad = report.failure_lines()[0]
        raise ProofError(f"{script.label}: line {bad.number}: {bad.message}")
    if report.redundant:
        if not force:
            raise RedundancyRefusal(report.redundant)
        pruned, remap = prune_script(script, report.redundant)
        record, inner = extract_theorem(pruned, theory, force=False)
        inner.remap = remap
        return record, inner
    record = script_record(script)
    report.record = record
    return record, report


def script_record(script: ProofScript) -> RuleRecord:
    tcl = []
    for ln in script.lines:
        if ln.label is None:
            continue
        tcl.append(ln.label)
        if ln.label == "disj":
            tcl.extend(c for c in ln.connections if isinstance(c, str))
    return RuleRecord(
        script.label,
        script.kind,
        tuple(script.stated_premise),
        script.stated_conclusion,
        tuple(unique(tcl)),
    )


def prune_script(script: ProofScript, redundant) -> tuple[ProofScript, dict[int, int]]:
    """Drop redundant lines, renumber, remap justification citations."""
    drop = set(redundant)
    remap, kept = {}, []
    for ln in script.lines:
        if ln.number in drop:
            continue
        remap[ln.number] = len(kept) + 1
        kept.append(ln)
    new_lines = []
    for ln in kept:
        connections = tuple(
            remap[c] if isinstance(c, int) else c for c in ln.connections
        )
        new_lines.append(
            ProofLine(remap[ln.number], ln.statement, ln.star, ln.label, connections)
        )
    premises = tuple(ln.statement for ln in new_lines if ln.is_premise)
    pruned = ProofScript(
        script.kind,
        script.label,
        premises,
        script.stated_conclusion,
        new_lines,
        script.source,
    )
    return pruned, remap


# ---------------------------------------------------------------------------
# Theorem connection lists.


def reduce_theorem_connections(label: str, theory: Theory) -> set[str]:
    """Fixed-point replacement of theorem labels by their connection lists
    until only axiom labels and automated markers remain."""
    if label in theory.rules and theory.rules[label].kind == "axiom":
        return {label}
    seen = set()
    b = set(_tcl_of(label, theory))
    while True:
        expandable = {
            x
            for x in b
            if x not in AUTOMATED_LABELS
            and theory.rules.get(x) is not None
            and theory.rules[x].kind != "axiom"
        }
        unknown = {
            x
            for x in b
            if x not in AUTOMATED_LABELS and x not in theory.rules
        }
        if unknown:
            raise ProofError(f"dangling labels in reduction of {label}: {sorted(unknown)}")
        if not expandable:
            return b
        for x in expandable:
            if x in seen:
                raise ProofError(f"cycle through {x} reducing {label}")
            seen.add(x)
            b.discard(x)
            b.update(_tcl_of(x, theory))


def _tcl_of(label: str, theory: Theory) -> tuple[str, ...]:
    rule = theory.rules.get(label)
    if rule is None:
        raise ProofError(f"UnknownLabel: {label}")
    return rule.tcl


def dependents_of(label: str, theory: Theory) -> set[str]:
    """Theorems/lemmas whose proofs reach the label through their
    connection lists (transitively, intermediate labels included)."""
    closure_cache: dict[str, set[str]] = {}

    def closure(lbl: str) -> set[str]:
        if lbl in closure_cache:
            return closure_cache[lbl]
        closure_cache[lbl] = set()  # cycle guard
        out = set()
        for x in _tcl_of(lbl, theory) if lbl in theory.rules else ():
            out.add(x)
            if x in theory.rules and theory.rules[x].kind != "axiom":
                out |= closure(x)
        closure_cache[lbl] = out
        return out

    return {
        r.label
        for r in theory.rules.values()
        if r.kind != "axiom" and label in closure(r.label)
    }


# ---------------------------------------------------------------------------
# Batch checking with dependency ordering.


def check_scripts(
    scripts, theory: Theory, store: bool = True
) -> list[VerificationReport]:
    """Verify a file set; scripts may cite each other's labels.

    Scripts are processed in citation order (a script waits for the
    scripts whose labels it cites); each successful extraction is stored
    so later scripts can use it.  Reports come back in input order.
    """
    by_label = {s.label: s for s in scripts}
    order, state = [], {}

    def visit(s):
        if state.get(s.label) == "done":
            return
        if state.get(s.label) == "busy":
            raise ProofError(f"citation cycle through {s.label}")
        state[s.label] = "busy"
        for cited in s.cited_rule_labels():
            if cited in by_label and cited not in theory.rules:
                visit(by_label[cited])
        state[s.label] = "done"
        order.append(s)

    for s in scripts:
        visit(s)

    reports = {}
    for s in order:
        report = check_proof(s, theory)
        if report.ok and not report.redundant and store:
            record = script_record(s)
            if record.label not in theory.rules:
                theory.store_rule(record)
            report.record = record
        reports[s.label] = report
    return [reports[s.label] for s in scripts]


# ---------------------------------------------------------------------------
# Step replay: options completeness.


def replay_options(script: ProofScript, theory: Theory) -> list[tuple[int, bool]]:
    """Step through a proof checking each justified line appears among the
    enumerated options at its step (up to the choice of fresh outputs)."""
    results = []
    for ln in script.lines:
        if ln.is_premise:
            continue
        prefix = [x.statement for x in script.lines[: ln.number - 1]]
        stars = [x.number for x in script.lines[: ln.number - 1] if x.star]
        options = engine.enumerate_options(prefix, theory, stars)
        hit = any(
            o.matches_step(ln.statement, ln.label, ln.connections) for o in options
        )
        results.append((ln.number, hit))
    return results


def corpus_theory(name: str, mach=None) -> Theory:
    """Bundled theory with its regression corpus verified and stored."""
    from .theory import corpus_files, load_bundled

    th = load_bundled(name, mach)
    sources = ["int", name] if name == "vec" else [name]
    scripts = []
    for source in sources:
        scripts += [parse_proof_file(f, th.mach) for f in corpus_files(source)]
    reports = check_scripts(scripts, th)
    bad = [r for r in reports if not r.ok or r.redundant]
    if bad:
        raise ProofError(f"bundled corpus of {name} failed: {bad[0].label}")
    return th
