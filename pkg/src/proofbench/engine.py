"""Derivation engine: enumerate legal next steps, apply them, split
disjunctions and contract branch conclusions.

A derivation is a 1-based list of statements (``None`` marks a terminal
falsity line).  All matching is done against the rule store of a theory:
a stored rule applies when some assignment of derivation lines to its
premise positions is I/O equivalent to the premise template, in which
case the instantiated conclusion (with fresh outputs) becomes an option.
The automated families (type introduction, the two substitution rules and
disjunction contraction) are generated directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .equivalence import Substitution, instantiate, io_match
from .model import (
    Statement,
    fresh_names,
    substitute_element,
    unique,
    validate_program,
)
from .theory import FALSE, DisjunctionDef, RuleRecord, Theory

Lines = list  # list[Statement | None]; index 0 is line 1


@dataclass(frozen=True)
class Option:
    conclusion: Statement | None  # None encodes :false
    label: str
    connections: tuple = ()
    provenance: str = "stored-rule"

    def render(self) -> str:
        head = FALSE if self.conclusion is None else self.conclusion.serialize()
        cl = " ".join(str(c) for c in self.connections)
        return f"{head}  {self.label} [{cl}]" if cl else f"{head}  {self.label}"

    def matches_step(self, statement, label, connections) -> bool:
        """Replay equality: same citation, same statement up to fresh outputs."""
        if self.label != label or tuple(self.connections) != tuple(connections):
            return False
        if statement is None or self.conclusion is None:
            return statement is None and self.conclusion is None
        return (
            self.conclusion.name == statement.name
            and self.conclusion.inputs == statement.inputs
            and len(self.conclusion.outputs) == len(statement.outputs)
        )


class EngineError(ValueError):
    pass


class NotAnOption(EngineError):
    pass


class StaleOption(EngineError):
    pass


class NotADisjunction(EngineError):
    pass


# ---------------------------------------------------------------------------
# Premise matching.


def match_assignments(lines: Lines, template, constants, limit=None):
    """Yield (line-number tuple, binding) for every assignment of derivation
    lines to template premise positions that is I/O equivalent to the
    template.  Lines may be cited more than once.
    """
    statements = [(i + 1, s) for i, s in enumerate(lines) if s is not None]
    by_name: dict[tuple, list] = {}
    for num, stmt in statements:
        by_name.setdefault((stmt.name, len(stmt.inputs), len(stmt.outputs)), []).append(
            (num, stmt)
        )
    consts = set(constants)
    found = 0

    def extend(bound, t_tok, i_tok):
        if t_tok in consts or _numeric(t_tok):
            return bound if i_tok == t_tok else None
        prev = bound.get(t_tok)
        if prev is None:
            new = dict(bound)
            new[t_tok] = i_tok
            return new
        return bound if prev == i_tok else None

    def walk(pos, chosen, bound):
        nonlocal found
        if limit is not None and found >= limit:
            return
        if pos == len(template):
            found += 1
            yield tuple(chosen), bound
            return
        tmpl = template[pos]
        key = (tmpl.name, len(tmpl.inputs), len(tmpl.outputs))
        for num, stmt in by_name.get(key, ()):
            b = bound
            ok = True
            for t_tok, i_tok in zip(tmpl.inputs + tmpl.outputs, stmt.inputs + stmt.outputs):
                b = extend(b, t_tok, i_tok)
                if b is None:
                    ok = False
                    break
            if ok:
                yield from walk(pos + 1, chosen + [num], b)

    yield from walk(0, [], {})


def _numeric(token: str) -> bool:
    return token.lstrip("+-").isdigit() and token not in ("", "+", "-")


def _binding_sub(bound) -> Substitution:
    return Substitution(inputs=dict(bound))


def used_names(lines: Lines) -> set:
    out = set()
    for stmt in lines:
        if stmt is not None:
            out.update(stmt.tokens())
    return out


# ---------------------------------------------------------------------------
# Option enumeration, one family at a time.


def stored_rule_options(lines: Lines, theory: Theory) -> list[Option]:
    options = []
    used = used_names(lines)
    for rule in theory.rules.values():
        if rule.is_falsity:
            continue
        for cited, bound in match_assignments(lines, rule.premise, theory.constant_names):
            sub = _binding_sub(bound)
            concl = rule.conclusion
            outs = fresh_names(len(concl.outputs), used, theory.constant_names)
            sub.outputs.update(dict(zip(concl.outputs, outs)))
            options.append(
                Option(instantiate(concl, sub), rule.label, cited, "stored-rule")
            )
    return _dedupe(options)


def falsity_options(lines: Lines, theory: Theory) -> list[Option]:
    options = []
    for rule in theory.falsity_rules:
        for cited, _ in match_assignments(lines, rule.premise, theory.constant_names):
            options.append(Option(None, rule.label, cited, "falsity"))
    return _dedupe(options)


def aio_options(lines: Lines, theory: Theory) -> list[Option]:
    options = []
    for num, stmt in enumerate(lines, start=1):
        if stmt is None:
            continue
        slots = [(tok, theory.input_type(stmt.name, k)) for k, tok in enumerate(stmt.inputs)]
        slots += [(tok, theory.output_type(stmt.name, k)) for k, tok in enumerate(stmt.outputs)]
        for tok, semtype in slots:
            check = theory.check_atom_for(semtype) if semtype else None
            if check:
                options.append(
                    Option(Statement(check, (tok,), ()), "aio", (num,), "aio")
                )
    return _dedupe(options)


def _eq_statement_parts(theory, stmt):
    """For an equality statement, the (lhs, rhs) it equates, else None."""
    eq_atoms = {eq for _, eq in theory.type_table.values()}
    if stmt.name in eq_atoms and len(stmt.inputs) == 2:
        return stmt.inputs
    return None


def sr_options(lines: Lines, theory: Theory) -> list[Option]:
    """Substitution-rule options: replaced instances (part 1) and the
    output equalities they induce (part 2)."""
    options = []
    used = used_names(lines)
    eq_lines = []
    for num, stmt in enumerate(lines, start=1):
        if stmt is None:
            continue
        parts = _eq_statement_parts(theory, stmt)
        if parts:
            eq_lines.append((num, stmt, parts))
    for i, stmt in enumerate(lines, start=1):
        if stmt is None:
            continue
        sig = theory.atoms.get(stmt.name)
        if sig is None or not sig.substitutable:
            continue
        for k, x_k in enumerate(stmt.inputs):
            semtype = theory.input_type(stmt.name, k)
            eq_atom = theory.eq_atom_for(semtype) if semtype else None
            if eq_atom is None:
                continue
            for j, eq_stmt, (lhs, rhs) in eq_lines:
                if eq_stmt.name != eq_atom or lhs != x_k:
                    continue
                new_inputs = tuple(substitute_element(stmt.inputs, k, rhs))
                outs = fresh_names(len(stmt.outputs), used, theory.constant_names)
                options.append(
                    Option(
                        Statement(stmt.name, new_inputs, tuple(outs)),
                        "sr1",
                        (i, j),
                        "sr1",
                    )
                )
                # part 2: an existing replaced instance equates outputs
                for l, cand in enumerate(lines, start=1):
                    if (
                        cand is None
                        or cand.name != stmt.name
                        or cand.inputs != new_inputs
                        or len(cand.outputs) != len(stmt.outputs)
                        or l == i
                    ):
                        continue
                    for m in range(len(stmt.outputs)):
                        out_type = theory.output_type(stmt.name, m)
                        eq2 = theory.eq_atom_for(out_type) if out_type else None
                        if eq2 is None:
                            continue
                        e_outs = _eq_conclusion_outputs(theory, eq2, used)
                        options.append(
                            Option(
                                Statement(
                                    eq2, (cand.outputs[m], stmt.outputs[m]), e_outs
                                ),
                                "sr2",
                                (i, j, l),
                                "sr2",
                            )
                        )
    return _dedupe(options)


def _eq_conclusion_outputs(theory, eq_atom, used):
    sig = theory.atoms.get(eq_atom)
    n = len(sig.output_types) if sig else 0
    return tuple(fresh_names(n, used, theory.constant_names)) if n else ()


def _dedupe(options) -> list[Option]:
    seen, out = set(), []
    for o in options:
        c = o.conclusion
        key = (
            o.label,
            o.connections,
            None if c is None else (c.name, c.inputs, len(c.outputs)),
        )
        if key not in seen:
            seen.add(key)
            out.append(o)
    return out


# ---------------------------------------------------------------------------
# Disjunction splitting and contraction.


def operand_programs(lines: Lines, star: int, theory: Theory) -> list[Lines]:
    """Instantiate the operand programs of the starred disjunction line.

    Returns one transformed line list per operand: lines before the star,
    then the operand statements (internal outputs freshly named), then the
    lines after it.
    """
    stmt = lines[star - 1]
    if stmt is None or stmt.name not in theory.disjunctions:
        raise NotADisjunction(f"line {star} is not a registered disjunction")
    d = theory.disjunctions[stmt.name]
    bound = io_match([stmt], [d.formal], theory.constant_names)
    if bound is None:
        raise NotADisjunction(f"line {star} does not instantiate {d.name}")
    out = []
    used = used_names(lines) | set(theory.constant_names)
    for op in d.operands:
        internal = unique(
            y for s in op for y in s.outputs if y not in d.formal.outputs
        )
        fresh = fresh_names(len(internal), used)
        sub = Substitution(
            inputs={**bound.inputs, **bound.outputs, **dict(zip(internal, fresh))}
        )
        body = [instantiate(s, sub) for s in op]
        out.append(list(lines[: star - 1]) + body + list(lines[star:]))
    return out


def branch_one_step(program: Lines, label: str, theory: Theory) -> list[Option]:
    """All conclusions a single cited rule (stored or automated) can add."""
    if label == "aio":
        pool = aio_options(program, theory)
    elif label in ("sr1", "sr2"):
        pool = [o for o in sr_options(program, theory) if o.label == label]
    elif label in theory.rules:
        rule = theory.rules[label]
        if rule.is_falsity:
            pool = [o for o in falsity_options(program, theory) if o.label == label]
        else:
            pool = [o for o in stored_rule_options(program, theory) if o.label == label]
    else:
        return []
    return pool


def contract_options(lines: Lines, theory: Theory, stars=()) -> list[Option]:
    """Options obtainable by splitting a starred line and contracting a
    conclusion common to both operand branches (false branches override)."""
    options = []
    for star in stars:
        try:
            ops = operand_programs(lines, star, theory)
        except NotADisjunction:
            continue
        if len(ops) != 2:
            continue
        branch_opts = []
        for program in ops:
            opts = stored_rule_options(program, theory)
            opts += sr_options(program, theory)
            opts += aio_options(program, theory)
            opts += falsity_options(program, theory)
            branch_opts.append(opts)
        for oa in branch_opts[0]:
            for ob in branch_opts[1]:
                combined = _combine_branches(oa, ob)
                if combined is not None:
                    options.append(
                        Option(combined, "disj", (oa.label, ob.label), "disj")
                    )
    return _dedupe(options)


def _combine_branches(oa: Option, ob: Option):
    """Contraction rules: common conclusion, or the non-false branch's."""
    if oa.conclusion is None and ob.conclusion is None:
        return None  # encoded by the caller as a :false option pair elsewhere
    if oa.conclusion is None:
        return ob.conclusion
    if ob.conclusion is None:
        return oa.conclusion
    a, b = oa.conclusion, ob.conclusion
    if a.name == b.name and a.inputs == b.inputs and len(a.outputs) == len(b.outputs):
        return a
    return None


def both_false_options(lines: Lines, theory: Theory, stars=()) -> list[Option]:
    options = []
    for star in stars:
        try:
            ops = operand_programs(lines, star, theory)
        except NotADisjunction:
            continue
        falsities = [falsity_options(p, theory) for p in ops]
        for oa in falsities[0]:
            for ob in falsities[1]:
                options.append(Option(None, "disj", (oa.label, ob.label), "disj"))
    return _dedupe(options)


def enumerate_options(lines: Lines, theory: Theory, stars=()) -> list[Option]:
    """Every legal next step of the derivation, across all families."""
    options = stored_rule_options(lines, theory)
    options += aio_options(lines, theory)
    options += sr_options(lines, theory)
    options += falsity_options(lines, theory)
    options += contract_options(lines, theory, stars)
    options += both_false_options(lines, theory, stars)
    return _dedupe(options)


# ---------------------------------------------------------------------------
# Interactive sessions.


@dataclass
class SessionLine:
    statement: Statement | None
    label: str | None = None  # None for premises
    connections: tuple = ()
    star: bool = False

    def render(self, num: int) -> str:
        text = FALSE if self.statement is None else self.statement.serialize()
        if self.star:
            text += " *"
        if self.label is None:
            return f"{num:>3} {text}"
        cl = " ".join(str(c) for c in self.connections)
        just = f"{self.label} [{cl}]" if cl else self.label
        return f"{num:>3} {text:<28} {just}"


@dataclass
class Session:
    theory: Theory
    lines: list[SessionLine] = field(default_factory=list)
    children: list["Session"] = field(default_factory=list)
    split_at: int | None = None
    status: str = "open"  # open | concluded | false
    version: int = 0

    @classmethod
    def from_premises(cls, theory: Theory, premises) -> "Session":
        session = cls(theory=theory)
        for stmt in premises:
            session.lines.append(SessionLine(stmt))
        session._validate()
        return session

    def statements(self) -> Lines:
        return [ln.statement for ln in self.lines]

    def starred(self) -> list[int]:
        return [i + 1 for i, ln in enumerate(self.lines) if ln.star]

    def options(self) -> list[Option]:
        if self.status != "open":
            return []
        return enumerate_options(self.statements(), self.theory, self.starred())

    def apply(self, option: Option) -> None:
        if self.status != "open":
            raise EngineError(f"session is {self.status}")
        current = self.options()
        if not any(
            o.matches_step(option.conclusion, option.label, option.connections)
            for o in current
        ):
            raise NotAnOption(option.render())
        self._append(option)

    def apply_statement(self, statement, label, connections) -> None:
        """Append a user-supplied step after re-deriving it as an option."""
        for o in self.options():
            if o.matches_step(statement, label, connections):
                self._append(replace(o, conclusion=statement) if statement else o)
                return
        raise NotAnOption(f"{statement} {label} {list(connections)}")

    def _append(self, option: Option) -> None:
        stmt = option.conclusion
        if stmt is not None:
            clash = set(stmt.outputs) & (
                used_names(self.statements()) | set(self.theory.constant_names)
            )
            if clash:
                outs = fresh_names(
                    len(stmt.outputs),
                    used_names(self.statements()),
                    self.theory.constant_names,
                )
                stmt = Statement(stmt.name, stmt.inputs, tuple(outs))
        self.lines.append(
            SessionLine(stmt, option.label, tuple(option.connections))
        )
        if stmt is None:
            self.status = "false"
        self._validate()
        self.version += 1

    def split(self, line: int) -> list["Session"]:
        programs = operand_programs(self.statements(), line, self.theory)
        self.lines[line - 1].star = True
        self.split_at = line
        self.children = [
            Session(theory=self.theory, lines=[SessionLine(s) for s in program])
            for program in programs
        ]
        self.version += 1
        return self.children

    def contract(self, line: int, label_a: str, label_b: str) -> None:
        """Append the common conclusion of the two operand branches,
        justified by the cited per-branch rules."""
        outcomes = []
        for program, label in zip(
            operand_programs(self.statements(), line, self.theory), (label_a, label_b)
        ):
            opts = branch_one_step(program, label, self.theory)
            if not opts:
                raise EngineError(f"branch rule {label} concludes nothing here")
            outcomes.append(opts)
        best = None
        for oa in outcomes[0]:
            for ob in outcomes[1]:
                if oa.conclusion is None and ob.conclusion is None:
                    best = Option(None, "disj", (label_a, label_b), "disj")
                else:
                    combined = _combine_branches(oa, ob)
                    if combined is not None:
                        best = Option(combined, "disj", (label_a, label_b), "disj")
                if best is not None:
                    break
            if best is not None:
                break
        if best is None:
            raise EngineError("branch conclusions do not agree")
        self._append(best)

    def _validate(self) -> None:
        from .model import literal_issues

        program = tuple(s for s in self.statements() if s is not None)
        issues = [
            i
            for i in validate_program(
                program, self.theory.constant_names, nlst=self.theory.mach.nlst
            )
            if i.code != "UnknownName"
        ]
        issues += literal_issues(program, self.theory.numeric_constants)
        if issues:
            raise EngineError(f"derivation invalid: {issues[0]}")

    def render(self) -> str:
        return "\n".join(ln.render(i + 1) for i, ln in enumerate(self.lines))
