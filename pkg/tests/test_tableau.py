from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_spec
from sltl.formula import UNIVERSAL, And, Always, Diamond, NegProp, Next, Prop, ProblemSpec
from sltl.oracle import random_corpus, random_spec
from sltl.parser import parse
from sltl.semantics import holds, satisfies_spec
from sltl.tableau import (
    BranchState, ConstraintSet, NodeConstraintSet, NotApplicable, NotPoised, RuleInstance,
    SearchLimits, _NodeLink, branch_length_bound, check_terminal, encodings, expand, init_root,
    is_poised, select_rule, solve, step,
)

p, q = Prop("p"), Prop("q")
STAR = frozenset({UNIVERSAL})
NEXT_CLASH = "<*>(p & X !p); [*] X p"


def cs(enc, label, *formulas):
    fs = frozenset(formulas)
    return ConstraintSet(frozenset(enc), label, fs, fs)


def node(*sets, next_label=1):
    return NodeConstraintSet(tuple(sets), next_label)


def crossed_path(events):
    """Rule names from the root to the first crossed leaf of a trace."""
    by_id, leaf = {}, None
    for e in events:
        if e.note == "crossed":
            leaf = e
            break
        by_id[e.node_id] = e
    path, cur = [leaf.rule], by_id[leaf.node_id]
    nodes = []
    while cur is not None:
        path.append(cur.rule)
        nodes.append(cur.node)
        cur = by_id.get(cur.parent_id)
    return path[::-1], nodes[::-1]


# -- encodings and the root -------------------------------------------------------

def test_encodings_follow_orderings_transitively():
    spec = parse("a <= b; b <= c; <a> p; <d> p")
    enc = encodings(spec)
    assert enc["a"] == {"a", "b", "c", UNIVERSAL}
    assert enc["b"] == {"b", "c", UNIVERSAL}
    assert enc["d"] == {"d", UNIVERSAL}
    assert enc[UNIVERSAL] == STAR


def test_root_of_next_clash():
    spec = parse(NEXT_CLASH)
    root = init_root(spec)
    assert root.sets == (cs(STAR, None), cs(STAR, 0, *spec.formulas))
    assert init_root(parse("p")).sets == (cs(STAR, None), cs(STAR, 0, p))


def test_root_has_one_box_set_per_encoding():
    spec = parse("s <= t; <s> p; [t] q")
    root = init_root(spec)
    root.check_well_formed(encodings(spec).values())
    assert len([c for c in root.sets if c.is_box]) == 3


# -- rule selection and expansion ---------------------------------------------------

def test_conjunction_is_selected_first():
    n = node(cs(STAR, None), cs(STAR, 0, And(p, q), Always(q)))
    assert select_rule(n) == RuleInstance("CON", (STAR, 0), And(p, q))


def test_next_clash_root_selects_box1():
    inst = select_rule(init_root(parse(NEXT_CLASH)))
    assert inst.rule == "BOX1"
    assert inst.describe() == "BOX¹ [*] X p"


def test_literals_and_next_formulas_are_poised():
    n = node(cs(STAR, None, Next(p)), cs(STAR, 0, p, Next(p), Next(NegProp("p"))))
    assert is_poised(n)
    assert not is_poised(node(cs(STAR, None, Next(q)), cs(STAR, 0, p)))


def test_next_clash_expansions():
    spec = parse(NEXT_CLASH)
    enc = encodings(spec)
    n1 = init_root(spec)
    (c,) = expand(n1, select_rule(n1), enc)
    assert c.node.box(STAR).delta == {Next(p)}
    n2 = c.node
    (c,) = expand(n2, select_rule(n2), enc)
    assert c.node.get((STAR, 1)).delta == {And(p, Next(NegProp("p")))}
    assert c.node.get((STAR, 0)).delta == frozenset()


def test_box2_copies_into_finer_sets():
    n = node(cs(STAR, None, Next(p)), cs(STAR, 1, p, Next(NegProp("p"))))
    inst = select_rule(n)
    assert inst.rule == "BOX2"
    (c,) = expand(n, inst, {UNIVERSAL: STAR})
    assert c.node.get((STAR, 1)).delta == {p, Next(p), Next(NegProp("p"))}


def test_disjunction_branches_and_shortcut():
    n = node(cs(STAR, None), cs(STAR, 0, parse("p | q").formulas[0]))
    kids = expand(n, select_rule(n), {UNIVERSAL: STAR})
    assert [k.node.get((STAR, 0)).delta for k in kids] == [{p}, {q}]
    # A disjunct that already held makes the other child redundant.
    c = ConstraintSet(STAR, 0, frozenset({parse("p | q").formulas[0]}), frozenset({p, parse("p | q").formulas[0]}))
    kids = expand(node(cs(STAR, None), c), RuleInstance("DIS", (STAR, 0), parse("p | q").formulas[0]), {})
    assert len(kids) == 1


def test_until_records_fulfilment():
    f = parse("p U q").formulas[0]
    n = node(cs(STAR, None), cs(STAR, 0, f))
    left, right = expand(n, select_rule(n), {UNIVERSAL: STAR})
    assert left.fulfils == (((STAR, 0), Next(f)),)
    assert right.node.get((STAR, 0)).delta == {p, Next(f)}


def test_dia2_merges_subsumed_witnesses():
    n = node(cs(STAR, None), cs(STAR, 1, p, q), cs(STAR, 2, p), next_label=3)
    inst = select_rule(n)
    assert inst == RuleInstance("DIA2", (STAR, 2), None, (STAR, 1))
    (c,) = expand(n, inst, {})
    assert c.node.get((STAR, 2)) is None
    assert c.merges == (((STAR, 2), (STAR, 1)),)


def test_expand_rejects_stale_instances():
    n = node(cs(STAR, None), cs(STAR, 0, p))
    with pytest.raises(NotApplicable):
        expand(n, RuleInstance("CON", (STAR, 0), And(p, q)), {})
    with pytest.raises(NotApplicable):
        expand(n, RuleInstance("CON", (STAR, 7), And(p, q)), {})


# -- step ------------------------------------------------------------------------

def test_step_drops_emptied_sets_and_keeps_next_arguments():
    n = node(cs(STAR, None, Next(p)), cs(STAR, 0),
             cs(STAR, 1, p, Next(p), Next(NegProp("p"))), next_label=2)
    out = step(n)
    assert out.sets == (cs(STAR, None, p), cs(STAR, 1, p, NegProp("p")))


def test_step_without_next_formulas_empties_sets():
    n = node(cs(STAR, None), cs(STAR, 0, p))
    assert step(n).sets == (cs(STAR, None), cs(STAR, 0))
    assert step(node(cs(STAR, None, Next(p), p))).sets == (cs(STAR, None, p),)


def test_step_requires_poised_node():
    with pytest.raises(NotPoised):
        step(node(cs(STAR, None), cs(STAR, 0, And(p, q))))


# -- terminal checks -----------------------------------------------------------------

def _state(n):
    return BranchState(_NodeLink(n, "INIT", 0, None, 1))


def test_terminal_checks():
    assert check_terminal(_state(node(cs(STAR, None), cs(STAR, 1, p, NegProp("p"))))).rule == "CONTRADICTION"
    assert check_terminal(_state(node(cs(STAR, None), cs(STAR, 0)))).rule == "EMPTY"
    assert check_terminal(_state(node(cs(STAR, None), cs(STAR, 0, And(p, q))))).status == "continue"


def test_always_is_ticked_by_loop():
    v = solve(parse("G p"))
    assert v.sat and v.branch.accepted_by == "LOOP"
    assert v.branch.rules() == ["ALW", "STEP", "ALW", "LOOP"]
    assert v.branch.anchor == 0


def test_unfulfilled_eventuality_is_pruned():
    v = solve(parse("G !p; F p"))
    assert v.status == "UNSAT"
    seen = []
    solve(parse("G q; F(p & X !p & X p)"), trace=seen.append)
    assert any(e.rule in ("PRUNE", "CONTRADICTION") for e in seen)


# -- whole runs --------------------------------------------------------------------------

def test_next_clash_trace():
    events = []
    v = solve(parse(NEXT_CLASH), trace=events.append)
    assert v.status == "UNSAT"
    rules, nodes = crossed_path(events)
    assert rules == ["INIT", "BOX1", "DIA1", "CON", "BOX2", "STEP", "CONTRADICTION"]
    assert [n.render() for n in nodes] == [
        "({*}; ⊥) {}, ({*}; ℓ0) {[*] X p, <*> (p & X !p)}",
        "({*}; ⊥) {X p}, ({*}; ℓ0) {<*> (p & X !p)}",
        "({*}; ⊥) {X p}, ({*}; ℓ0) {}, ({*}; ℓ1) {p & X !p}",
        "({*}; ⊥) {X p}, ({*}; ℓ0) {}, ({*}; ℓ1) {p, X !p}",
        "({*}; ⊥) {X p}, ({*}; ℓ0) {}, ({*}; ℓ1) {p, X p, X !p}",
        "({*}; ⊥) {p}, ({*}; ℓ1) {p, !p}",
    ]
    assert events[-1].to_text() == "   5 <-    5  CONTRADICTION  [crossed]"


@pytest.mark.parametrize("text, sat", [
    ("p U q", True), ("F G p", True), ("G(p -> X p); p", True),
    ("p; !p", False), ("G p; F !p", False), ("F p; G !p", False),
])
def test_ltl_fragment(text, sat):
    spec = parse(text)
    v = solve(spec)
    assert v.sat is sat
    if sat:
        assert satisfies_spec(v.model, 0, spec)


@pytest.mark.parametrize("name, sat", [
    ("medical_base.sltl", True), ("medical_diamond.sltl", True), ("medical_box.sltl", False),
    ("next_clash.sltl", False), ("ltl_sat.sltl", True),
])
def test_corpus_verdicts(name, sat):
    spec = corpus_spec(name)
    v = solve(spec)
    assert v.sat is sat
    if sat:
        assert satisfies_spec(v.model, 0, spec)


def test_extract_single_state():
    v = solve(parse("p"))
    assert v.branch.accepted_by == "EMPTY"
    assert v.model.dumps() == '{"lambda": {"*": [0]}, "sequences": [{"loop": [[]], "prefix": [["p"]]}]}'


def test_extract_always():
    v = solve(parse("G p"))
    assert v.model.dumps() == '{"lambda": {"*": [0]}, "sequences": [{"loop": [["p"]], "prefix": []}]}'


def test_extract_always_with_standpoint_witness():
    spec = parse("G p; <s> q")
    m = solve(spec).model
    assert holds(m, 0, 0, Always(p))
    assert any("q" in m.sequences[i].state(0) for i in m.lam["s"])


def test_extract_box_reaches_every_sequence():
    m = solve(parse("[*] p")).model
    assert all(holds(m, i, 0, p) for i in range(len(m.sequences)))


def test_infinitely_many_sequences_are_reported():
    v = solve(parse("G <*>(p & X G !p)"))
    assert v.sat and v.model is None
    assert "new precisification" in v.reason


def test_limits():
    spec = parse("G(p | q); G F p; G F q; G F !p")
    assert solve(spec, SearchLimits(max_nodes=5)).status == "LIMIT"
    assert solve(spec, SearchLimits(max_depth=3)).status == "LIMIT"
    assert solve(spec).sat


def test_parallel_search_matches_sequential():
    for spec in random_corpus(12, seed=11) + [corpus_spec("medical_diamond.sltl"), parse(NEXT_CLASH)]:
        a, b = solve(spec), solve(spec, jobs=2)
        assert a.status == b.status
        if a.model is not None:
            assert a.model == b.model


def test_branch_length_bound():
    assert branch_length_bound(parse("p U q")) == 8


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_expansions_keep_nodes_well_formed(seed):
    import random
    spec = random_spec(random.Random(seed))
    enc = encodings(spec).values()
    parents = {}
    events = []
    solve(spec, SearchLimits(max_nodes=3000), trace=events.append)
    for e in events:
        if e.node is None:
            continue
        e.node.check_well_formed(enc)
        parent = parents.get(e.parent_id)
        if parent is not None:
            # No rule application leaves a node unchanged, so no instance repeats forever.
            assert e.node.sets != parent.sets
        parents[e.node_id] = e.node


def test_diamond_star_invariance_on_examples():
    for text in ("p", "G p", "<s> q; [*] !q", NEXT_CLASH):
        spec = parse(text)
        conj = spec.formulas[0]
        for f in spec.formulas[1:]:
            conj = And(conj, f)
        wrapped = ProblemSpec(spec.vocab, spec.orderings, (Diamond(UNIVERSAL, conj),))
        assert solve(spec).status == solve(wrapped).status
