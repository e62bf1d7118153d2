from __future__ import annotations

import pytest
from hypothesis import given

from sltl.formula import (
    UNIVERSAL, Always, And, Box, Diamond, Eventually, Implies, NegProp, Next, Not, Or, ProblemSpec,
    Prop, Release, StandpointExpression, Until, Vocabulary, closure, is_nnf, negation, render,
    size, size_set, subformulae, to_nnf, walk,
)
from sltl.parser import parse_formula
from strategies import nnf_formulas, surface_formulas

p, q = Prop("p"), Prop("q")


@pytest.mark.parametrize("surface, nnf", [
    (Not(And(p, q)), Or(NegProp("p"), NegProp("q"))),
    (Not(Or(p, q)), And(NegProp("p"), NegProp("q"))),
    (Not(Box("s", p)), Diamond("s", NegProp("p"))),
    (Not(Diamond("s", p)), Box("s", NegProp("p"))),
    (Not(Until(p, q)), Release(NegProp("p"), NegProp("q"))),
    (Not(Release(p, q)), Until(NegProp("p"), NegProp("q"))),
    (Not(Next(p)), Next(NegProp("p"))),
    (Not(Eventually(p)), Always(NegProp("p"))),
    (Not(Always(p)), Eventually(NegProp("p"))),
    (Not(Not(p)), p),
    (Implies(p, q), Or(NegProp("p"), q)),
    (Not(Implies(p, q)), And(p, NegProp("q"))),
])
def test_nnf_dualities(surface, nnf):
    assert to_nnf(surface) == nnf


@given(surface_formulas)
def test_nnf_output_is_nnf(f):
    assert is_nnf(to_nnf(f))


@given(nnf_formulas)
def test_nnf_is_idempotent(f):
    assert to_nnf(f) == f
    assert to_nnf(to_nnf(f)) == to_nnf(f)


@given(nnf_formulas)
def test_negation_is_an_involution(f):
    assert negation(negation(f)) == f


def test_subformulae():
    assert subformulae(p) == {p}
    assert subformulae(Until(p, q)) == {Until(p, q), p, q}
    assert subformulae(Box("s", And(p, q))) == {Box("s", And(p, q)), And(p, q), p, q}


def test_size():
    assert size(p) == 1
    assert size(Until(p, q)) == 3
    assert size_set([p, Until(p, q)]) == 4
    # Shared subformulae count once per formula.
    assert size(And(p, p)) == 2


def test_closure_examples():
    assert closure([Eventually(p)]) == {Eventually(p), p, NegProp("p"), Next(Eventually(p))}
    assert closure([Until(p, q)]) == {Until(p, q), p, q, NegProp("p"), NegProp("q"), Next(Until(p, q))}
    assert closure([p]) == {p, NegProp("p")}
    assert Next(Always(q)) in closure([Always(q)])
    assert Next(Release(p, q)) in closure([Release(p, q)])


@given(nnf_formulas)
def test_closure_properties(f):
    cl = closure([f])
    assert subformulae(f) <= cl
    for g in cl:
        if isinstance(g, (Prop, NegProp)):
            assert Prop(g.name) in cl and NegProp(g.name) in cl
        if isinstance(g, (Until, Release, Eventually, Always)) and g in subformulae(f):
            assert Next(g) in cl
    # Closure is a fixpoint: closing again adds nothing new beyond the X-wrappers' own parts.
    assert closure(list(cl)) >= cl


def test_render_examples():
    assert render(And(p, Next(q))) == "p & X q"
    assert render(Diamond(UNIVERSAL, p)) == "<*> p"
    assert render(Release(p, q)) == "p R q"
    assert render(Box("s", And(p, q))) == "[s] (p & q)"
    assert render(Next(NegProp("p"))) == "X !p"
    assert render(Until(Until(p, q), p)) == "(p U q) U p"
    assert render(Until(p, Until(q, p))) == "p U q U p"
    assert render(Or(And(p, q), p)) == "p & q | p"


@given(nnf_formulas)
def test_render_parse_round_trip(f):
    assert parse_formula(render(f)) == f
    assert parse_formula(render(f, full_parens=True)) == f


def test_walk_visits_every_node():
    f = And(Next(p), Diamond("s", q))
    assert list(walk(f)) == [f, Next(p), p, Diamond("s", q), q]


def test_vocabulary_always_has_universal():
    v = Vocabulary(frozenset({"p"}), frozenset({"s"}))
    assert v.standpoints == {"s", UNIVERSAL}


@pytest.mark.parametrize("props, standpoints", [
    (frozenset(), frozenset()),
    (frozenset({"p q"}), frozenset()),
    (frozenset({"p"}), frozenset({"bad-name"})),
])
def test_vocabulary_rejects_bad_names(props, standpoints):
    with pytest.raises(ValueError):
        Vocabulary(props, standpoints)


def test_problem_spec_dedupes_and_checks_names():
    spec = ProblemSpec.build([p, p, q])
    assert spec.formulas == (p, q)
    with pytest.raises(ValueError):
        ProblemSpec(Vocabulary(frozenset({"p"})), frozenset(), (q,))
    with pytest.raises(ValueError):
        ProblemSpec(Vocabulary(frozenset({"p"})), frozenset(), ())
    with pytest.raises(ValueError):
        ProblemSpec(Vocabulary(frozenset({"p"})), frozenset({StandpointExpression("a", "b")}), (p,))
