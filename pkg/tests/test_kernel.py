import pytest

from proofbench import kernel
from proofbench.kernel import (
    ProofError,
    RedundancyRefusal,
    check_proof,
    check_scripts,
    dependents_of,
    extract_theorem,
    parse_proof,
    parse_proof_file,
    prune_script,
    reduce_connections,
    reduce_theorem_connections,
    replay_options,
)
from proofbench.theory import corpus_files, load_bundled

LEM3 = """\
Lemma lem3.

eqi [a b] [ ]
lt [b c] [ ]
-------------
lt [a c] [ ]

Proof.
  1 eqi [a b] [ ]
  2 lt [b c] [ ]
  3 eqi [b a] [ ]            axi1b [1]
  4 lt [a c] [ ]             sr1 [2 3]
"""


@pytest.fixture(scope="module")
def int_theory():
    return kernel.corpus_theory("int")


@pytest.fixture(scope="module")
def int_scripts():
    th = load_bundled("int")
    return {f.name[:-4]: parse_proof_file(f, th.mach) for f in corpus_files("int")}


class TestParsing:
    def test_script_shape(self):
        script = parse_proof(LEM3)
        assert script.kind == "lemma" and script.label == "lem3"
        assert len(script.stated_premise) == 2
        assert script.lines[2].label == "axi1b"
        assert script.lines[2].connections == (1,)
        assert script.lines[3].connections == (2, 3)

    def test_star_and_false_lines(self):
        text = """\
Lemma x.

lt [a 0] [ ]
eqi [a 0] [ ]
-------------
:false

Proof.
  1 lt [a 0] [ ] *
  2 eqi [a 0] [ ]
  3 lt [0 0] [ ]             sr1 [1 2]
  4 :false                   ord5 [3]
"""
        script = parse_proof(text)
        assert script.lines[0].star
        assert script.lines[3].statement is None
        assert script.stated_conclusion is None

    def test_empty_connection_list_citation(self):
        text = "Theorem t.\n\n---\nlt [0 1] [ ]\n\nProof.\n  1 lt [0 1] [ ]  ord4\n"
        script = parse_proof(text)
        assert script.lines[0].label == "ord4"
        assert script.lines[0].connections == ()


class TestCheckProof:
    def test_thm2_passes_clean(self, int_theory, int_scripts):
        report = check_proof(int_scripts["thm2"], int_theory)
        assert report.ok and report.redundant == []

    def test_tampered_connection_list_fails_at_line(self, int_theory, int_scripts):
        import copy

        script = copy.deepcopy(int_scripts["thm2"])
        line = script.lines[17]  # line 18: eqi [l k] [ ]  sr2 [15 10 16]
        assert line.label == "sr2"
        line.connections = (15, 10, 13)
        report = check_proof(script, int_theory)
        assert not report.ok
        assert report.failure_lines()[0].number == 18

    def test_fabricated_citation_fails(self, int_theory):
        text = """\
Theorem bogus.

add [a b] [c]
-------------
eqi [a b] [ ]

Proof.
  1 add [a b] [c]
  2 eqi [a b] [ ]            axi1b [1]
"""
        report = check_proof(parse_proof(text), int_theory)
        assert not report.ok

    def test_unknown_label(self, int_theory):
        text = "Theorem u.\n\nadd [a b] [c]\n---\nadd [b a] [d]\n\nProof.\n  1 add [a b] [c]\n  2 add [b a] [d]  nosuch [1]\n"
        report = check_proof(parse_proof(text), int_theory)
        assert "UnknownLabel" in report.failure_lines()[0].message

    def test_unreachable_conclusion_inputs_is_not_a_proof(self, int_theory):
        text = """\
Theorem loose.

typei [a] [ ]
-------------
add [b 0] [c]

Proof.
  1 typei [a] [ ]
  2 add [a 0] [x]            axi4a [1]
  3 typei [x] [ ]            aio [2]
  4 add [x 0] [b]            axi4a [3]
  5 typei [b] [ ]            aio [4]
  6 add [b 0] [c]            axi4a [5]
"""
        report = check_proof(parse_proof(text), int_theory)
        assert not report.ok
        assert "not a proof" in report.failure_lines()[0].message


class TestReduceConnections:
    def test_lem3_hand_run(self, int_theory):
        script = parse_proof(LEM3)
        assert check_proof(script, int_theory).ok
        support, redundant = reduce_connections(script)
        assert support == [1, 2]
        assert redundant == []

    def test_injected_unused_premise_lands_in_r(self, int_theory, int_scripts):
        source = int_scripts["thm2"].source
        # inject a fresh premise as a new line 4, renumbering the rest
        lines = source.splitlines()
        head = lines.index("Proof.")
        body = lines[head + 1 :]
        out = lines[: lines.index("---------------")]
        out += ["typei [z] [ ]", "---------------", "eqi [m a] [ ]", "", "Proof."]
        out += ["  1 add [a b] [c]", "  2 mult [-1 b] [d]", "  3 add [c d] [m]",
                "  4 typei [z] [ ]"]
        import re

        for raw in body[3:]:
            m = re.match(r"\s*(\d+)\s+(.*)", raw)
            num = int(m.group(1)) + 1
            text = m.group(2)
            text = re.sub(
                r"\[([0-9 ]+)\]\s*$",
                lambda g: "[" + " ".join(str(int(t) + 1 if int(t) > 3 else int(t)) for t in g.group(1).split()) + "]",
                text,
            )
            out.append(f"  {num} {text}")
        script = parse_proof("\n".join(out))
        report = check_proof(script, int_theory)
        assert report.ok
        assert report.redundant == [4]

    def test_corpus_is_redundancy_free(self, int_theory, int_scripts):
        for script in int_scripts.values():
            report = check_proof(script, int_theory)
            assert report.ok, script.label
            assert report.redundant == [], script.label


class TestExtraction:
    def test_refusal_then_force(self, int_theory):
        text = """\
Lemma padded.

eqi [a b] [ ]
lt [b c] [ ]
typei [z] [ ]
-------------
lt [a c] [ ]

Proof.
  1 eqi [a b] [ ]
  2 lt [b c] [ ]
  3 typei [z] [ ]
  4 eqi [b a] [ ]            axi1b [1]
  5 typei [b] [ ]            aio [1]
  6 lt [a c] [ ]             sr1 [2 4]
"""
        script = parse_proof(text)
        with pytest.raises(RedundancyRefusal) as err:
            extract_theorem(script, int_theory)
        assert err.value.redundant == [3, 5]
        record, report = extract_theorem(script, int_theory, force=True)
        assert [s.serialize() for s in record.premise] == [
            "eqi [a b] [ ]",
            "lt [b c] [ ]",
        ]
        assert report.remap == {1: 1, 2: 2, 4: 3, 6: 4}

    def test_prune_stability(self, int_theory):
        script = parse_proof(
            """\
Lemma noisy.

add [a b] [c]
-------------
add [b a] [d]

Proof.
  1 add [a b] [c]
  2 typei [a] [ ]            aio [1]
  3 add [b a] [d]            axi2a [1]
"""
        )
        report = check_proof(script, int_theory)
        assert report.redundant == [2]
        pruned, remap = prune_script(script, report.redundant)
        inner = check_proof(pruned, int_theory)
        assert inner.ok and inner.redundant == []
        record, _ = extract_theorem(pruned, int_theory)
        assert record.conclusion.serialize() == "add [b a] [d]"

    def test_extraction_matches_stated_block(self, int_theory, int_scripts):
        record, _ = extract_theorem(int_scripts["thm17"], int_theory)
        assert [s.serialize() for s in record.premise] == [
            "neq [a 0] [ ]",
            "mult [a a] [b]",
        ]
        assert record.conclusion.serialize() == "lt [0 b] [ ]"
        assert record.tcl == ("disj", "lem2", "lem1")

    def test_extraction_idempotence(self, int_theory, int_scripts):
        # a stored theorem licenses a one-step proof of its own conclusion
        record, _ = extract_theorem(int_scripts["thm1"], int_theory)
        text = """\
Theorem echo.

add [a b] [c]
mult [-1 b] [d]
---------------
add [c d] [m]

Proof.
  1 add [a b] [c]
  2 mult [-1 b] [d]
  3 add [c d] [m]             thm1 [1 2]
"""
        report = check_proof(parse_proof(text), int_theory)
        assert report.ok

    def test_falsity_script_extracts_falsity_rule(self, int_theory, int_scripts):
        record, _ = extract_theorem(int_scripts["lem19"], int_theory)
        assert record.is_falsity
        assert record.kind == "lemma"


class TestTheoremConnections:
    def test_thm17_reduces_to_axioms_only(self, int_theory):
        reduced = reduce_theorem_connections("thm17", int_theory)
        assert reduced
        for label in reduced:
            if label in kernel.AUTOMATED_LABELS:
                continue
            assert int_theory.rules[label].kind == "axiom", label

    def test_axiom_reduces_to_itself(self, int_theory):
        assert reduce_theorem_connections("axi2a", int_theory) == {"axi2a"}

    def test_dangling_label_detected(self, int_theory):
        from proofbench.theory import RuleRecord
        from proofbench.model import parse_statement

        int_theory_copy = load_bundled("int")
        int_theory_copy.store_rule(
            RuleRecord(
                "ghostly", "theorem",
                (parse_statement("add [a b] [c]"),),
                parse_statement("add [b a] [d]"),
                ("vanished",),
            )
        )
        with pytest.raises(ProofError):
            reduce_theorem_connections("ghostly", int_theory_copy)

    def test_dependents(self, int_theory):
        deps = dependents_of("axi2a", int_theory)
        assert {"thm1", "thm2", "thm3"} <= deps
        assert dependents_of("lem1", int_theory) >= {"thm17"}
        fresh = load_bundled("int")
        assert dependents_of("axi2a", fresh) == set()

    def test_monotone_under_unrelated_additions(self, int_theory):
        from proofbench.theory import RuleRecord
        from proofbench.model import parse_statement

        before = reduce_theorem_connections("thm17", int_theory)
        int_theory.store_rule(
            RuleRecord(
                "unrelated", "theorem",
                (parse_statement("add [a b] [c]"),),
                parse_statement("typei [a] [ ]"),
                ("aio",),
            )
        )
        assert reduce_theorem_connections("thm17", int_theory) == before
        int_theory.remove_rule("unrelated")


class TestBatch:
    def test_citation_order_resolved(self):
        th = load_bundled("int")
        scripts = {f.name: parse_proof_file(f, th.mach) for f in corpus_files("int")}
        # thm3 cites thm1/thm2; pass them in the wrong order on purpose
        batch = [scripts["thm3.prf"], scripts["thm2.prf"], scripts["thm1.prf"]]
        reports = check_scripts(batch, th)
        assert all(r.ok for r in reports)

    def test_cycle_detected(self):
        th = load_bundled("int")
        a = parse_proof(
            "Theorem a1.\n\nadd [a b] [c]\n---\nadd [b a] [d]\n\nProof.\n"
            "  1 add [a b] [c]\n  2 add [b a] [d]  b1 [1]\n"
        )
        b = parse_proof(
            "Theorem b1.\n\nadd [a b] [c]\n---\nadd [b a] [d]\n\nProof.\n"
            "  1 add [a b] [c]\n  2 add [b a] [d]  a1 [1]\n"
        )
        with pytest.raises(ProofError):
            check_scripts([a, b], th)


class TestReplay:
    def test_every_line_of_thm34_is_an_option(self, int_theory, int_scripts):
        results = replay_options(int_scripts["thm34"], int_theory)
        assert results and all(ok for _, ok in results)

    def test_matcher_soundness_on_emitted_options(self, int_theory):
        # concat(cited lines, conclusion) matches the rule's premise+conclusion
        from proofbench import engine
        from proofbench.equivalence import io_match

        lines = list(int_scripts_lines())
        for option in engine.stored_rule_options(lines, int_theory):
            rule = int_theory.rules[option.label]
            instance = [lines[c - 1] for c in option.connections] + [option.conclusion]
            template = list(rule.premise) + [rule.conclusion]
            assert io_match(instance, template, int_theory.constant_names), option.render()


def int_scripts_lines():
    from proofbench.model import parse_program

    return parse_program("add [a b] [c]\nmult [-1 b] [d]\nlt [a b] [ ]")
