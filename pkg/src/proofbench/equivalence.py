"""Program equivalence, I/O equivalence and sublist testing.

``io_match`` is the matching heart of the kernel: it decides whether an
instance statement sequence is I/O equivalent to a template, i.e. whether
the instance can be produced from the template by a consistent renaming
that preserves shared-name structure and constants.  The relation is
deliberately not symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import Program, Statement, is_numeric


def is_sublist(b: Program, a: Program) -> bool:
    """True iff every statement of b occurs (string-identical) in a."""
    pool = set(a)
    return all(s in pool for s in b)


def mutual_sublists(p: Program, q: Program) -> bool:
    return is_sublist(p, q) and is_sublist(q, p)


@dataclass(frozen=True)
class Disjunction:
    """Operand tree for disjunction-aware program equivalence."""

    left: "Program | Disjunction"
    right: "Program | Disjunction"


def prgm_equiv(u, v, is_false=None, _seen=None) -> bool:
    """Extended program equivalence over programs and operand trees.

    Clauses: mutual sublists; commuted operands; a disjunction statement
    distributed over its context; and a disjunction with one operand known
    false collapsing to the other operand.  ``is_false`` is a predicate
    usually backed by the falsity rules registered in a theory.
    """
    if _seen is None:
        _seen = set()
    key = (_key(u), _key(v))
    if key in _seen:
        return False
    _seen.add(key)

    if isinstance(u, tuple) and isinstance(v, tuple):
        if mutual_sublists(u, v):
            return True
    if isinstance(u, Disjunction) and isinstance(v, Disjunction):
        if prgm_equiv(u.left, v.left, is_false, _seen) and prgm_equiv(
            u.right, v.right, is_false, _seen
        ):
            return True
        if prgm_equiv(u.left, v.right, is_false, _seen) and prgm_equiv(
            u.right, v.left, is_false, _seen
        ):
            return True
    for a, b in ((u, v), (v, u)):
        if isinstance(a, Disjunction) and is_false is not None:
            if _known_false(a.right, is_false) and prgm_equiv(a.left, b, is_false, _seen):
                return True
            if _known_false(a.left, is_false) and prgm_equiv(a.right, b, is_false, _seen):
                return True
    # distribution: [p d q] with d = a|b  vs  [p a q] | [p b q]
    for a, b in ((u, v), (v, u)):
        if isinstance(a, tuple) and isinstance(b, Disjunction):
            for i, stmt in enumerate(a):
                if isinstance(stmt, Disjunction):
                    left = a[:i] + _as_program(stmt.left) + a[i + 1 :]
                    right = a[:i] + _as_program(stmt.right) + a[i + 1 :]
                    if prgm_equiv(Disjunction(left, right), b, is_false, _seen):
                        return True
    return False


def _as_program(node):
    return node if isinstance(node, tuple) else (node,)


def _known_false(node, is_false) -> bool:
    return isinstance(node, tuple) and is_false(node)


def _key(node):
    if isinstance(node, Disjunction):
        return ("|", _key(node.left), _key(node.right))
    return node


@dataclass
class Substitution:
    """Witness for an I/O equivalence match, template token -> instance token."""

    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)

    def apply(self, token: str, constants=()) -> str:
        if token in self.inputs:
            return self.inputs[token]
        if token in self.outputs:
            return self.outputs[token]
        return token


class MatchFailure(Exception):
    def __init__(self, position, reason):
        self.position = position
        self.reason = reason
        super().__init__(f"statement {position}: {reason}")


def io_match(
    instance,
    template,
    constants=(),
    strict_injective: bool = False,
) -> Substitution | None:
    """Match an instance statement sequence against a template.

    Both sequences must carry the same atom names and per-statement list
    lengths.  Equal template input tokens must map to equal instance
    tokens, template inputs bound to earlier template outputs must be
    bound to the corresponding instance outputs, and constants map only to
    themselves.  Returns the witnessing substitution, or None.
    """
    try:
        return io_match_or_raise(instance, template, constants, strict_injective)
    except MatchFailure:
        return None


def io_match_or_raise(instance, template, constants=(), strict_injective=False):
    if len(instance) != len(template):
        raise MatchFailure(0, "length mismatch")
    consts = set(constants)
    sub = Substitution()
    bound: dict[str, str] = {}

    def bind(pos, t_tok, i_tok, side):
        if t_tok in consts or is_numeric(t_tok):
            if i_tok != t_tok:
                raise MatchFailure(pos, f"constant {t_tok} matched against {i_tok}")
            return
        if t_tok in bound:
            if bound[t_tok] != i_tok:
                raise MatchFailure(
                    pos, f"{t_tok} already bound to {bound[t_tok]}, saw {i_tok}"
                )
            return
        if strict_injective and i_tok in bound.values():
            raise MatchFailure(pos, f"non-injective binding for {i_tok}")
        bound[t_tok] = i_tok
        (sub.outputs if side == "out" else sub.inputs)[t_tok] = i_tok

    for pos, (inst, tmpl) in enumerate(zip(instance, template), start=1):
        if inst.name != tmpl.name:
            raise MatchFailure(pos, f"name {inst.name} vs {tmpl.name}")
        if len(inst.inputs) != len(tmpl.inputs) or len(inst.outputs) != len(tmpl.outputs):
            raise MatchFailure(pos, "I/O arity mismatch")
        for t_tok, i_tok in zip(tmpl.inputs, inst.inputs):
            bind(pos, t_tok, i_tok, "in")
        for t_tok, i_tok in zip(tmpl.outputs, inst.outputs):
            bind(pos, t_tok, i_tok, "out")
    return sub


def instantiate(statement: Statement, sub: Substitution, constants=()) -> Statement:
    """Rewrite a template statement through a substitution witness."""
    return Statement(
        statement.name,
        tuple(sub.apply(t, constants) for t in statement.inputs),
        tuple(sub.apply(t, constants) for t in statement.outputs),
    )


def same_up_to_outputs(a: Statement, b: Statement) -> bool:
    """Equality modulo the choice of fresh output names."""
    if a.name != b.name or a.inputs != b.inputs:
        return False
    return len(a.outputs) == len(b.outputs)
