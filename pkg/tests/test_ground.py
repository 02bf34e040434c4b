"""Ground-format parsing and serialization, checked against tests/oracles.py."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
import oracles
from measp.ground import (GroundProgram, GroundRule, ParseError, RuleKind,
                          UnsupportedConstructError, emit_numeric,
                          emit_text_ground, parse_numeric, parse_text_ground)

TAIL = "0\n0\nB+\n0\nB-\n0\n1\n"


def _one_rule(line: str) -> GroundRule:
    program = parse_numeric(line + "\n" + TAIL)
    assert program.n_rules == 1
    return program.rules[0]


# ---------------------------------------------------------------------------
# worked examples, one per rule code


def test_basic_fact():
    r = _one_rule("1 2 0 0")
    assert r.kind is RuleKind.BASIC
    assert r.head_atoms == (2,)
    assert r.pos_body == () and r.neg_body == ()
    assert r.bound is None and r.weights is None


def test_basic_rule_negative_then_positive_body():
    r = _one_rule("1 2 2 1 3 4")
    assert r.kind is RuleKind.BASIC
    assert r.head_atoms == (2,)
    assert r.neg_body == (3,)
    assert r.pos_body == (4,)


def test_cardinality_rule():
    r = _one_rule("2 5 3 1 2 6 7 8")
    assert r.kind is RuleKind.WEIGHT and r.code == 2
    assert r.head_atoms == (5,)
    assert r.bound == 2
    assert r.neg_body == (6,)
    assert r.pos_body == (7, 8)
    assert r.weights is None


def test_choice_rule():
    r = _one_rule("3 2 4 5 1 0 6")
    assert r.kind is RuleKind.CHOICE
    assert r.head_atoms == (4, 5)
    assert r.neg_body == () and r.pos_body == (6,)


def test_weight_rule():
    r = _one_rule("5 4 7 2 1 3 2 4 6")
    assert r.kind is RuleKind.WEIGHT and r.code == 5
    assert r.head_atoms == (4,)
    assert r.bound == 7
    assert r.neg_body == (3,) and r.pos_body == (2,)
    assert r.weights == (4, 6)


def test_minimize_rule():
    r = _one_rule("6 0 2 1 3 2 1 5")
    assert r.kind is RuleKind.MINIMIZE
    assert r.head_atoms == ()
    assert r.neg_body == (3,) and r.pos_body == (2,)
    assert r.weights == (1, 5)


def test_disjunctive_rule():
    r = _one_rule("8 2 4 5 1 0 3")
    assert r.kind is RuleKind.DISJUNCTIVE
    assert r.head_atoms == (4, 5)
    assert r.pos_body == (3,)


def test_unknown_code_kept_verbatim():
    text = "90 7 1 2 3\n" + TAIL
    program = parse_numeric(text)
    r = program.rules[0]
    assert r.kind is RuleKind.OTHER
    assert r.raw == (7, 1, 2, 3)
    assert emit_numeric(program) == text


# ---------------------------------------------------------------------------
# whole documents


def test_full_document_sections():
    text = ("1 2 0 0\n"
            "1 3 1 0 2\n"
            "0\n"
            "2 a\n"
            "3 b(1,2)\n"
            "0\n"
            "B+\n"
            "2\n"
            "0\n"
            "B-\n"
            "3\n"
            "0\n"
            "1\n")
    p = parse_numeric(text)
    assert p.symbol_table == {2: "a", 3: "b(1,2)"}
    assert p.compute_plus == (2,)
    assert p.compute_minus == (3,)
    assert p.models == 1
    assert p.false_atom is None            # the only B- atom is named
    assert p.n_rules == 2 and p.n_atoms == 2
    assert emit_numeric(p) == text


def test_empty_program():
    p = parse_numeric(TAIL)
    assert p.n_rules == 0 and p.n_atoms == 0
    assert p.false_atom is None
    assert emit_numeric(p) == TAIL


def test_symbol_only_atoms_count():
    text = "0\n5 lonely\n9 another\n0\nB+\n0\nB-\n0\n1\n"
    p = parse_numeric(text)
    assert p.n_atoms == 2
    assert p.atom_name(5) == "lonely"


def test_atom_name_synthesized_and_collision_free():
    text = "1 2 1 0 3\n0\n2 x3\n0\nB+\n0\nB-\n0\n1\n"
    p = parse_numeric(text)
    assert p.atom_name(2) == "x3"
    synthesized = p.atom_name(3)
    assert synthesized != "x3"
    assert synthesized not in p.symbol_table.values()


# ---------------------------------------------------------------------------
# constraint marker


CONSTRAINED = ("1 1 1 0 2\n"      # :- b.
               "1 2 0 0\n"        # b.
               "0\n"
               "2 b\n"
               "0\n"
               "B+\n"
               "0\n"
               "B-\n"
               "1\n"
               "0\n"
               "1\n")


def test_marker_detected_and_constraint_kind():
    p = parse_numeric(CONSTRAINED)
    assert p.false_atom == 1
    kinds = [r.kind for r in p.rules]
    assert kinds == [RuleKind.CONSTRAINT, RuleKind.BASIC]
    assert p.rules[0].head_atoms == ()
    assert p.rules[0].pos_body == (2,)
    assert p.n_atoms == 1                  # the marker is not a real atom


def test_marker_round_trip_is_exact():
    assert emit_numeric(parse_numeric(CONSTRAINED)) == CONSTRAINED


def test_named_bminus_atom_is_not_a_marker():
    text = CONSTRAINED.replace("2 b\n", "2 b\n1 bot\n")
    p = parse_numeric(text)
    assert p.false_atom is None
    assert [r.kind for r in p.rules] == [RuleKind.BASIC, RuleKind.BASIC]


def test_marker_candidate_in_body_disqualifies():
    # atom 1 is an unnamed B- atom but also occurs in a body
    text = ("1 2 1 0 1\n"
            "0\n"
            "2 b\n"
            "0\n"
            "B+\n"
            "0\n"
            "B-\n"
            "1\n"
            "0\n"
            "1\n")
    p = parse_numeric(text)
    assert p.false_atom is None


def test_marker_candidate_in_choice_head_disqualifies():
    text = ("3 1 1 0 0\n"
            "1 1 1 0 2\n"
            "0\n"
            "2 b\n"
            "0\n"
            "B+\n"
            "0\n"
            "B-\n"
            "1\n"
            "0\n"
            "1\n")
    p = parse_numeric(text)
    assert p.false_atom is None


def test_two_unnamed_bminus_atoms_mean_no_marker():
    text = CONSTRAINED.replace("B-\n1\n0\n", "B-\n1\n4\n0\n")
    p = parse_numeric(text)
    assert p.false_atom is None


# ---------------------------------------------------------------------------
# parse errors


@pytest.mark.parametrize("text,fragment", [
    ("", "end of document"),
    ("1 2 0 0\n", "end of document"),
    ("1 2 0\n" + TAIL, "too short"),
    ("abc\n" + TAIL, "non-integer"),
    ("0\n0\nB-\n0\nB+\n0\n1\n", "B+"),
    ("0\n0\nB+\n0\n1\n", "B-"),
    (TAIL + "7\n", "trailing"),
    ("6 3 1 0 2 1\n" + TAIL, "minimize"),
    ("0\n2 a\n2 b\n0\nB+\n0\nB-\n0\n1\n", "duplicate"),
    ("0\n2\n0\nB+\n0\nB-\n0\n1\n", "name"),
    ("1 0 0 0\n" + TAIL, "positive"),
    ("1 2 2 1 3 3\n" + TAIL, "positively and negatively"),
    ("1 2 1 2 3\n" + TAIL, "too short"),   # m > n
])
def test_numeric_parse_errors(text, fragment):
    with pytest.raises(ParseError) as err:
        parse_numeric(text)
    assert fragment.lower() in str(err.value).lower()


def test_parse_error_carries_line_number():
    with pytest.raises(ParseError) as err:
        parse_numeric("1 2 0 0\nbogus line\n" + TAIL)
    assert err.value.line == 2


# ---------------------------------------------------------------------------
# randomized round-trips against the oracle decoder


def test_500_random_numeric_round_trips():
    rng = random.Random(0xA5)
    for i in range(500):
        text = gen.random_numeric_program(rng)
        p = parse_numeric(text)
        assert emit_numeric(p) == text, f"case {i} not byte-identical"
        assert parse_numeric(emit_numeric(p)) == p, f"case {i} not stable"


def test_random_numeric_structure_matches_oracle():
    rng = random.Random(0xB7)
    for _ in range(200):
        text = gen.random_numeric_program(rng)
        p = parse_numeric(text)
        ref = oracles.decode_numeric(text)
        assert p.models == ref["models"]
        assert p.symbol_table == ref["symbols"]
        assert p.compute_plus == tuple(ref["bplus"])
        assert p.compute_minus == tuple(ref["bminus"])
        assert p.n_rules == len(ref["rules"])
        for mine, theirs in zip(p.rules, ref["rules"]):
            if mine.kind is RuleKind.OTHER:
                assert theirs["type"] not in (1, 2, 3, 5, 6, 8)
                continue
            assert mine.code == theirs["type"]
            if mine.kind is RuleKind.CONSTRAINT:
                assert theirs["head"] == [p.false_atom]
            else:
                assert list(mine.head_atoms) == theirs["head"]
            assert list(mine.pos_body) == theirs["pos"]
            assert list(mine.neg_body) == theirs["neg"]
            assert mine.bound == theirs["bound"]
            want_w = theirs["weights"]
            if mine.kind is RuleKind.WEIGHT and mine.code == 2:
                assert want_w is None
            elif want_w is not None:
                assert list(mine.weights) == want_w


@settings(max_examples=150)
@given(st.text(alphabet="0123456789 \nB+-ab", max_size=200))
def test_numeric_parser_is_total(text):
    try:
        parse_numeric(text)
    except ParseError:
        pass


# ---------------------------------------------------------------------------
# textual dialect


def test_text_basic_forms():
    p = parse_text_ground("a.\n"
                          "b :- a, not c.\n"
                          ":- c, d.\n"
                          "e | f :- b.\n"
                          "% just a comment\n"
                          "\n"
                          "g(1,2).\n")
    kinds = [r.kind for r in p.rules]
    assert kinds == [RuleKind.BASIC, RuleKind.BASIC, RuleKind.CONSTRAINT,
                     RuleKind.DISJUNCTIVE, RuleKind.BASIC]
    assert p.false_atom is not None        # a constraint exists
    assert p.n_rules == 5
    # atoms: a b c d e f g(1,2)
    assert p.n_atoms == 7


def test_text_without_constraints_has_no_marker():
    p = parse_text_ground("a.\nb :- a.\n")
    assert p.false_atom is None


def test_text_atom_arguments_survive_round_trip():
    text = "holds(f(1,g(2)),3) :- not broken(a,b).\n"
    p = parse_text_ground(text)
    again = parse_text_ground(emit_text_ground(p))
    assert again == p
    names = set(again.symbol_table.values())
    assert "holds(f(1,g(2)),3)" in names
    assert "broken(a,b)" in names


def test_text_round_trip_random():
    rng = random.Random(0xC9)
    for i in range(500):
        text = gen.random_text_program(rng)
        p = parse_text_ground(text)
        emitted = emit_text_ground(p)
        assert parse_text_ground(emitted) == p, f"case {i}"
        # and the canonical form is a fixed point
        assert emit_text_ground(parse_text_ground(emitted)) == emitted


def test_text_structure_matches_oracle_scanner():
    rng = random.Random(0xD1)
    for _ in range(200):
        text = gen.random_text_program(rng)
        p = parse_text_ground(text)
        triples = oracles.scan_text_rules(text)
        assert p.n_rules == len(triples)
        for rule, (heads, pos, neg) in zip(p.rules, triples):
            display = lambda a: p.atom_name(a)  # noqa: E731
            assert [display(a) for a in rule.head_atoms] == \
                [h.replace(" ", "") for h in heads]
            assert [display(a) for a in rule.pos_body] == \
                [s.replace(" ", "") for s in pos]
            assert [display(a) for a in rule.neg_body] == \
                [s.replace(" ", "") for s in neg]


@pytest.mark.parametrize("bad", [
    "a",                       # missing final period
    "p(X) :- q(X).",           # variables are not ground
    "a :- not .",
    "a :- b,, c.",
    "a | .",
    ":- .",
    ".",
    "a :- (b.",
    "p(1,.",
    "a :- not not b.",
])
def test_text_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_text_ground(bad + "\n")


@settings(max_examples=150)
@given(st.text(alphabet="ab(),.|:-% \nnot123", max_size=120))
def test_text_parser_is_total(text):
    try:
        parse_text_ground(text)
    except ParseError:
        pass


def test_emit_text_rejects_choice_and_weight_rules():
    choice = parse_numeric("3 1 2 0 0\n" + TAIL)
    with pytest.raises(UnsupportedConstructError):
        emit_text_ground(choice)
    weight = parse_numeric("5 2 1 1 0 3 4\n" + TAIL)
    with pytest.raises(UnsupportedConstructError):
        emit_text_ground(weight)


def test_emit_text_handles_constraints():
    p = parse_text_ground(":- a.\na.\n")
    emitted = emit_text_ground(p)
    assert ":- a." in emitted
    assert parse_text_ground(emitted) == p


# ---------------------------------------------------------------------------
# cross-dialect equivalence: numeric encoding of a text program


def test_text_and_numeric_views_agree():
    text_program = parse_text_ground("a.\nb :- a, not c.\n:- c.\n")
    numeric = emit_numeric(text_program)
    reparsed = parse_numeric(numeric)
    assert reparsed.n_rules == text_program.n_rules
    assert reparsed.n_atoms == text_program.n_atoms
    assert [r.kind for r in reparsed.rules] == \
        [r.kind for r in text_program.rules]
    assert reparsed.false_atom == text_program.false_atom
