from __future__ import annotations

import pytest
from hypothesis import given

from sltl.formula import (
    UNIVERSAL, And, Box, Diamond, Implies, NegProp, Next, Not, Or, Prop, StandpointExpression,
    Until, render, to_nnf,
)
from sltl.parser import ParseError, UndeclaredName, parse, parse_extended, parse_formula, tokenize
from strategies import surface_formulas

p, q = Prop("p"), Prop("q")


def test_simple_formula():
    assert parse_formula("p & X !p") == And(p, Next(NegProp("p")))


def test_next_clash_problem():
    spec = parse("<*>(p & X !p); [*] X p")
    assert spec.formulas == (Diamond(UNIVERSAL, And(p, Next(NegProp("p")))), Box(UNIVERSAL, Next(p)))
    assert spec.orderings == frozenset()
    assert spec.vocab.props == {"p"}


def test_orderings_and_implication():
    spec = parse("DE <= IT; [DE](safe -> tested)")
    assert spec.orderings == {StandpointExpression("DE", "IT")}
    assert spec.formulas == (Box("DE", Or(NegProp("safe"), Prop("tested"))),)
    assert spec.vocab.standpoints == {"DE", "IT", UNIVERSAL}


def test_newlines_separate_statements_outside_parentheses():
    spec = parse("p\n(q &\n p)\n# a comment\nX q")
    assert spec.formulas == (p, And(q, p), Next(q))


def test_precedence():
    assert parse_formula("p | q & p") == Or(p, And(q, p))
    assert parse_formula("p U q U p") == Until(p, Until(q, p))
    assert parse_formula("!p U q") == Until(NegProp("p"), q)
    assert parse_extended("p -> q -> p") == Implies(p, Implies(q, p))
    assert parse_extended("!(p & q)") == Not(And(p, q))


def test_names_may_contain_underscores_and_start_with_x():
    f = parse_formula("X_Safe & X X_Safe")
    assert f == And(Prop("X_Safe"), Next(Prop("X_Safe")))


@pytest.mark.parametrize("text, line, col", [
    ("p &", 1, 4),
    ("p & )", 1, 5),
    ("p\n<s p", 2, 4),
    ("p $ q", 1, 3),
    ("", 1, 1),
    ("# only a comment", 1, 1),
    ("X", 1, 2),
])
def test_parse_errors_carry_positions(text, line, col):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert (info.value.line, info.value.col) == (line, col)


def test_declarations_make_names_strict():
    spec = parse("prop p, q\nstandpoint s\n<s> p")
    assert spec.vocab.props == {"p", "q"}
    with pytest.raises(UndeclaredName):
        parse("prop p\nq")
    with pytest.raises(UndeclaredName):
        parse("standpoint s\n<t> p")
    with pytest.raises(UndeclaredName):
        parse("p", strict=True)
    # The universal standpoint never needs declaring.
    assert parse("prop p\nstandpoint s\n<*> p", strict=True).formulas


@given(surface_formulas)
def test_surface_round_trip(f):
    assert parse_extended(render(f, full_parens=True)) == f
    assert parse_formula(render(f, full_parens=True)) == to_nnf(f)


def test_tokenizer_tracks_lines():
    toks = tokenize("p\n  q")
    q_tok = [t for t in toks if t.text == "q"][0]
    assert (q_tok.line, q_tok.col) == (2, 3)
