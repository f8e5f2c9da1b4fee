import pytest
from hypothesis import given, strategies as st

from proofbench import model
from proofbench.model import (
    MachParams,
    NameClash,
    ParseError,
    Statement,
    concat,
    free_variables,
    fresh_names,
    intersection,
    literal_issues,
    parse_program,
    parse_statement,
    primary_inputs,
    serialize_program,
    setminus,
    unique,
    validate_program,
)


def stmt(text):
    return parse_statement(text)


class TestParsing:
    def test_basic_statement(self):
        s = stmt("add [a b] [c]")
        assert s.name == "add"
        assert s.inputs == ("a", "b")
        assert s.outputs == ("c",)

    def test_empty_output_list(self):
        s = stmt("typei [a] [ ]")
        assert s.outputs == ()
        assert s.serialize() == "typei [a] [ ]"

    def test_single_list_is_an_error(self):
        with pytest.raises(ParseError):
            stmt("add [a b c]")

    def test_malformed_brackets(self):
        with pytest.raises(ParseError):
            stmt("add [a b [c]")
        with pytest.raises(ParseError):
            stmt("add a b [c]")

    def test_illegal_name(self):
        with pytest.raises(ParseError):
            stmt("Add [a] [b]")
        with pytest.raises(ParseError):
            stmt("1add [a] [b]")

    def test_token_longer_than_nstr(self):
        mach = MachParams(nstr=4)
        with pytest.raises(ParseError):
            parse_statement("add [abcde b] [c]", mach)

    def test_numeric_bound(self):
        mach = MachParams(nint=10)
        with pytest.raises(ParseError):
            parse_statement("add [11 b] [c]", mach)
        parse_statement("add [-10 b] [c]", mach)

    def test_duplicate_outputs_rejected(self):
        with pytest.raises(ParseError):
            stmt("p [a] [b b]")

    def test_io_clash_rejected(self):
        with pytest.raises(ParseError):
            stmt("p [a] [a]")

    def test_round_trip(self):
        for text in ("add [a b] [c]", "typei [a] [ ]", "lt [-1 0] [ ]", "f [v n] [w x]"):
            assert parse_statement(stmt(text).serialize()) == stmt(text)


class TestMachParams:
    def test_defaults_valid(self):
        MachParams()

    def test_positive_required(self):
        with pytest.raises(ValueError):
            MachParams(nint=0)

    def test_nprem_bounded_by_nlst(self):
        with pytest.raises(ValueError):
            MachParams(nprem=10, nlst=5)

    def test_eps(self):
        assert MachParams(eps_denom=3).eps == pytest.approx(0.001)


class TestListUtilities:
    def test_unique(self):
        assert unique(["a", "b", "b", "a"]) == ["a", "b"]

    def test_setminus(self):
        assert setminus(["a", "b", "c"], ["b"]) == ["a", "c"]

    def test_intersection(self):
        assert intersection(["a", "b"], ["b", "d"]) == ["b"]

    @given(st.lists(st.sampled_from("abcdef")))
    def test_unique_idempotent(self, items):
        assert unique(unique(items)) == unique(items)

    @given(st.lists(st.sampled_from("abcdef")), st.lists(st.sampled_from("abcdef")))
    def test_setminus_removes_everything(self, items, remove):
        assert not set(setminus(items, remove)) & set(remove)


class TestValidation:
    def test_duplicate_output(self):
        p = parse_program("add [a b] [c]\nmult [a d] [c]")
        issues = validate_program(p)
        assert any(i.code == "DuplicateOutput" and i.token == "c" for i in issues)

    def test_forward_binding(self):
        p = parse_program("add [a e] [c]\nmult [a b] [e]")
        issues = validate_program(p)
        assert any(i.code == "ForwardBinding" and i.token == "e" for i in issues)

    def test_constant_as_output(self):
        p = parse_program("zvec [a] [ep]")
        issues = validate_program(p, constants=("ep",))
        assert any(i.code == "ConstantAsOutput" for i in issues)

    def test_repeated_check_statement_allowed_but_flagged(self):
        p = parse_program("typei [a] [ ]\ntypei [a] [ ]")
        assert validate_program(p) == []
        assert model.repeated_check_warnings(p)

    def test_literal_issues(self):
        p = parse_program("add [5 b] [c]")
        assert literal_issues(p, ("-1", "0", "1"))
        assert not literal_issues(parse_program("add [1 b] [c]"), ("-1", "0", "1"))


class TestVariableClassification:
    def test_piv_and_free(self):
        p = parse_program("add [a b] [c]\nmult [-1 b] [d]")
        assert primary_inputs(p) == ["a", "b", "-1"]
        assert free_variables(p, ("-1", "0", "1")) == ["a", "b"]

    def test_bound_outputs_excluded(self):
        p = parse_program("add [a b] [c]\nadd [c a] [d]")
        assert primary_inputs(p) == ["a", "b"]

    def test_empty_program(self):
        assert primary_inputs(()) == []
        assert free_variables(()) == []


class TestConcat:
    def test_success(self):
        p = parse_program("add [a b] [c]")
        q = parse_program("add [b d] [e]")
        assert serialize_program(concat(p, q)) == "add [a b] [c]\nadd [b d] [e]"

    def test_concat_with_empty(self):
        p = parse_program("add [a b] [c]")
        assert concat(p, ()) == p
        assert concat((), p) == p

    def test_name_clash(self):
        p = parse_program("add [a b] [c]")
        q = parse_program("mult [x y] [c]")
        with pytest.raises(NameClash):
            concat(p, q)

    def test_parts_are_sublists_of_result(self):
        from proofbench.equivalence import is_sublist

        p = parse_program("add [a b] [c]")
        q = parse_program("mult [a b] [d]")
        r = concat(p, q)
        assert is_sublist(p, r) and is_sublist(q, r)


class TestFreshNames:
    def test_skips_used_and_constants(self):
        out = fresh_names(3, {"a", "c"}, ("b",))
        assert out == ["d", "e", "f"]

    def test_rolls_to_suffixes(self):
        used = set("abcdefghijklmnopqrstuvwxyz")
        assert fresh_names(2, used) == ["a1", "b1"]
