import random

import pytest
from hypothesis import given, settings, strategies as st

from proofbench.equivalence import (
    Disjunction,
    Substitution,
    instantiate,
    io_match,
    is_sublist,
    mutual_sublists,
    prgm_equiv,
)
from proofbench.model import parse_program, parse_statement


def prog(text):
    return parse_program(text)


class TestSublists:
    def test_longer_sublist(self):
        # repetition means a longer list can be a sublist of a shorter one
        b = prog("typei [a] [ ]\ntypei [b] [ ]\ntypei [b] [ ]\ntypei [a] [ ]")
        a = prog("typei [a] [ ]\ntypei [b] [ ]\ntypei [c] [ ]")
        assert is_sublist(b, a)
        assert not is_sublist(a, b)

    def test_mutual_sublists_despite_lengths(self):
        p = prog("typei [b] [ ]\ntypei [b] [ ]\ntypei [c] [ ]\ntypei [a] [ ]")
        q = prog("typei [a] [ ]\ntypei [b] [ ]\ntypei [c] [ ]")
        assert mutual_sublists(p, q)

    def test_empty_is_sublist_of_everything(self):
        assert is_sublist((), prog("add [a b] [c]"))
        assert is_sublist((), ())

    statements = st.lists(
        st.sampled_from(
            [parse_statement(t) for t in ("typei [a] [ ]", "typei [b] [ ]", "lt [a b] [ ]")]
        ),
        max_size=6,
    )

    @given(statements)
    def test_reflexive(self, p):
        assert is_sublist(tuple(p), tuple(p))

    @given(statements, statements, statements)
    def test_transitive(self, a, b, c):
        if is_sublist(tuple(a), tuple(b)) and is_sublist(tuple(b), tuple(c)):
            assert is_sublist(tuple(a), tuple(c))


class TestPrgmEquiv:
    def test_permutations_equivalent(self):
        p = prog("add [a b] [c]\nmult [a b] [d]")
        q = prog("mult [a b] [d]\nadd [a b] [c]")
        assert prgm_equiv(p, q)

    def test_commuted_disjunction(self):
        a, b = prog("lt [a b] [ ]"), prog("lt [b a] [ ]")
        assert prgm_equiv(Disjunction(a, b), Disjunction(b, a))

    def test_distributed_disjunction(self):
        p = prog("typei [a] [ ]")
        a, b = prog("lt [a 0] [ ]"), prog("lt [0 a] [ ]")
        u = (p[0], Disjunction(a, b))
        v = Disjunction(p + a, p + b)
        assert prgm_equiv(u, v)

    def test_false_operand_dropped(self):
        false_block = prog("lt [a a] [ ]")
        keep = prog("typei [a] [ ]")
        is_false = lambda program: program == false_block
        assert prgm_equiv(Disjunction(keep, false_block), keep, is_false)

    def test_symmetric_and_transitive_on_permutations(self):
        rng = random.Random(0)
        base = list(prog("add [a b] [c]\nmult [a b] [d]\ntypei [a] [ ]"))
        programs = []
        for _ in range(3):
            rng.shuffle(base)
            programs.append(tuple(base))
        for u in programs:
            for v in programs:
                assert prgm_equiv(u, v) and prgm_equiv(v, u)


class TestIoMatch:
    def test_thm1_line8_example(self):
        instance = prog("add [b a] [g]")
        template = prog("add [a b] [c]")
        sub = io_match(instance, template)
        assert sub.inputs == {"a": "b", "b": "a"}
        assert sub.outputs == {"c": "g"}

    def test_identity_on_itself(self):
        p = prog("add [a b] [c]\nmult [c b] [d]")
        sub = io_match(p, p)
        assert all(k == v for k, v in sub.inputs.items())
        assert all(k == v for k, v in sub.outputs.items())

    def test_non_injective_allowed_one_way(self):
        assert io_match(prog("mult [u u] [w]"), prog("mult [a b] [c]"))
        assert io_match(prog("mult [u v] [w]"), prog("mult [a a] [c]")) is None

    def test_constants_map_to_themselves(self):
        assert io_match(prog("mult [-1 a] [b]"), prog("mult [-1 x] [y]"))
        assert io_match(prog("mult [0 a] [b]"), prog("mult [-1 x] [y]")) is None

    def test_bound_output_condition(self):
        template = prog("add [a b] [c]\nmult [c b] [d]")
        good = prog("add [u v] [w]\nmult [w v] [x]")
        bad = prog("add [u v] [w]\nmult [u v] [x]")
        assert io_match(good, template)
        assert io_match(bad, template) is None

    def test_name_sequence_must_match(self):
        assert io_match(prog("mult [a b] [c]"), prog("add [a b] [c]")) is None
        assert io_match(prog("add [a b] [c]"), prog("add [a b] [c]\nadd [b a] [d]")) is None

    def test_composition(self):
        a = prog("add [u v] [w]\nadd [w v] [x]")
        b = prog("add [a b] [c]\nadd [c b] [d]")
        c = prog("add [p q] [r]\nadd [r q] [s]")
        assert io_match(a, b) and io_match(b, c) and io_match(a, c)

    def test_strict_injective_flag(self):
        assert io_match(
            prog("mult [u u] [w]"), prog("mult [a b] [c]"), strict_injective=True
        ) is None

    def test_instantiate_round_trip(self):
        template = parse_statement("add [a b] [c]")
        sub = Substitution(inputs={"a": "x", "b": "y"}, outputs={"c": "z"})
        assert instantiate(template, sub).serialize() == "add [x y] [z]"
