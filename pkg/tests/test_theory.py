import pytest

from proofbench.model import MachParams, parse_statement
from proofbench.theory import (
    RuleRecord,
    TheoryError,
    bundled_theory_names,
    corpus_files,
    load_bundled,
    parse_disjunction_line,
    parse_rule_blocks,
)


class TestBundledTheories:
    def test_all_theories_load(self):
        assert bundled_theory_names() == ["int", "meta", "rat", "sets", "vec"]
        for name in bundled_theory_names():
            load_bundled(name)

    def test_int_inventory(self):
        th = load_bundled("int")
        for family in ("axi1a", "axi10b", "ord1a", "ord6", "neq1", "neq2", "le1", "le2"):
            assert family in th.rules
        assert set(th.disjunctions) == {"neq", "le", "abs", "trich"}
        assert set(th.constants) == {"-1", "0", "1", "pr"}
        assert th.rules["ord5"].is_falsity

    def test_meta_inventory(self):
        th = load_bundled("meta")
        assert set(th.atoms) == {
            "typep", "eqp", "eqio", "sub", "conc", "disj", "ext", "false",
            "aext", "afalse",
        }
        for label in ("per", "cr1", "cr9b", "flse1", "flse2", "dsj1", "dsj6"):
            assert label in th.rules
        assert "ep" in th.constants

    def test_substitutable_flags(self):
        th = load_bundled("int")
        assert not th.atoms["typei"].substitutable
        assert th.atoms["add"].substitutable
        assert not th.atoms["le"].substitutable  # satisfies the rule by derivation
        meta = load_bundled("meta")
        assert meta.atoms["conc"].substitutable
        assert not meta.atoms["ext"].substitutable
        assert not meta.atoms["eqio"].substitutable
        vec = load_bundled("vec")
        assert vec.atoms["dim"].substitutable  # exercised by the bundled corpus

    def test_abs_disjunction_has_two_statement_operands(self):
        th = load_bundled("int")
        abs_def = th.disjunctions["abs"]
        assert [len(op) for op in abs_def.operands] == [2, 2]

    def test_falsity_premise_registered(self):
        th = load_bundled("int")
        program = (parse_statement("lt [x x] [ ]"),)
        assert th.matches_registered_falsity(program)
        assert not th.matches_registered_falsity((parse_statement("lt [x y] [ ]"),))


class TestRuleStore:
    def test_store_and_retrieve(self):
        th = load_bundled("int")
        record = RuleRecord(
            "tst1", "theorem",
            (parse_statement("add [a b] [c]"),),
            parse_statement("typei [a] [ ]"),
            ("aio",),
        )
        th.store_rule(record)
        assert th.rules["tst1"].tcl == ("aio",)

    def test_duplicate_label_rejected(self):
        th = load_bundled("int")
        with pytest.raises(TheoryError):
            th.store_rule(th.rules["axi1a"])

    def test_relabel(self):
        th = load_bundled("int")
        th.relabel("axi1a", "theorem", tcl=("sr1",))
        assert th.rules["axi1a"].kind == "theorem"

    def test_unknown_conclusion_input_rejected(self):
        th = load_bundled("int")
        record = RuleRecord(
            "bad1", "axiom",
            (parse_statement("add [a b] [c]"),),
            parse_statement("typei [z] [ ]"),
        )
        with pytest.raises(TheoryError):
            th.store_rule(record)

    def test_premise_longer_than_nprem_rejected(self):
        th = load_bundled("int")
        th.mach = th.mach.replace(nprem=1)
        record = RuleRecord(
            "bad2", "axiom",
            (parse_statement("typei [a] [ ]"), parse_statement("typei [b] [ ]")),
            parse_statement("trich [a b] [ ]"),
        )
        with pytest.raises(TheoryError):
            th.store_rule(record)

    def test_unregistered_literal_rejected(self):
        th = load_bundled("int")
        record = RuleRecord(
            "bad3", "axiom",
            (parse_statement("add [5 b] [c]"),),
            parse_statement("typei [b] [ ]"),
        )
        with pytest.raises(TheoryError):
            th.store_rule(record)

    def test_serialize_round_trip_is_stable(self):
        th = load_bundled("int")
        for rule in th.rules.values():
            text = rule.serialize()
            blocks = parse_rule_blocks(text)
            assert len(blocks) == 1
            kind, label, prem, concl = blocks[0]
            from proofbench.theory import parse_rule_record

            again = parse_rule_record(kind, label, prem, concl, th.mach)
            assert again.serialize() == text


class TestDisjunctionDefs:
    def test_parse_single_statement_operands(self):
        d = parse_disjunction_line(
            "le [a b] [ ] = lt [a b] [ ] | eqi [a b] [ ]", MachParams()
        )
        assert d.name == "le"
        assert [len(op) for op in d.operands] == [1, 1]

    def test_parse_bracketed_operands(self):
        d = parse_disjunction_line(
            "abs [a] [b] = [lt [a 0] [ ] mult [-1 a] [b]] | [le [0 a] [ ] mult [1 a] [b]]",
            MachParams(),
        )
        assert d.operands[0][1].serialize() == "mult [-1 a] [b]"

    def test_operand_conditions_checked_on_load(self, tmp_path):
        src = load_bundled("int")
        base = tmp_path / "broken"
        base.mkdir()
        import importlib.resources as res

        root = res.files("proofbench").joinpath("data/theories/int")
        for f in ("manifest", "axiom.dat"):
            (base / f).write_text(root.joinpath(f).read_text())
        # operand free inputs disagree with the formal inputs
        (base / "disjunctions").write_text("neq [a b] [ ] = lt [a c] [ ] | lt [b a] [ ]\n")
        from proofbench.theory import load_theory_dir

        with pytest.raises(TheoryError):
            load_theory_dir(base)


class TestCorpusData:
    def test_counts(self):
        assert len(corpus_files("int")) == 66
        assert len(corpus_files("vec")) == 16
        assert len(corpus_files("meta")) == 19
        assert len(corpus_files("sets")) == 9

    def test_round_trip_statements(self):
        from proofbench import kernel

        th = load_bundled("int")
        for f in corpus_files("int"):
            script = kernel.parse_proof_file(f, th.mach)
            for ln in script.lines:
                if ln.statement is not None:
                    assert parse_statement(ln.statement.serialize()) == ln.statement
