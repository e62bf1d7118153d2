"""Hypothesis strategies for formulas and small structures."""
from __future__ import annotations

from hypothesis import strategies as st

from sltl.formula import (
    UNIVERSAL, Always, And, Box, Diamond, Eventually, Implies, NegProp, Next, Not, Or, Prop,
    Release, Until,
)
from sltl.semantics import LassoSequence, LassoStructure

PROPS = ("p", "q")
STANDPOINTS = ("s", "t")

literals = st.sampled_from(PROPS).flatmap(lambda p: st.sampled_from([Prop(p), NegProp(p)]))
standpoint_names = st.sampled_from(STANDPOINTS + (UNIVERSAL,))


def _extend(children):
    binary = st.sampled_from([And, Or, Until, Release])
    unary = st.sampled_from([Next, Eventually, Always])
    modal = st.sampled_from([Diamond, Box])
    return st.one_of(
        st.builds(lambda op, a, b: op(a, b), binary, children, children),
        st.builds(lambda op, a: op(a), unary, children),
        st.builds(lambda op, s, a: op(s, a), modal, standpoint_names, children),
    )


nnf_formulas = st.recursive(literals, _extend, max_leaves=6)


def _extend_surface(children):
    return st.one_of(
        _extend(children),
        st.builds(Not, children),
        st.builds(Implies, children, children),
    )


surface_formulas = st.recursive(st.sampled_from([Prop(p) for p in PROPS]), _extend_surface, max_leaves=6)

states = st.frozensets(st.sampled_from(PROPS))
sequences = st.builds(
    LassoSequence,
    st.lists(states, max_size=2).map(tuple),
    st.lists(states, min_size=1, max_size=3).map(tuple),
)


@st.composite
def structures(draw, standpoints=STANDPOINTS):
    seqs = tuple(draw(st.lists(sequences, min_size=1, max_size=3)))
    k = len(seqs)
    lam = {}
    for s in standpoints:
        lam[s] = frozenset(draw(st.sets(st.integers(0, k - 1), min_size=1)))
    return LassoStructure(seqs, lam)
