"""Tree-shaped tableau for standpoint LTL.

Each tableau node holds a set of constraint sets ``<enc, label, delta>``.  Box
(unlabelled) sets carry what every precisification of a standpoint encoding
must satisfy at the current instant; labelled (diamond) sets are individual
witness precisifications.  Expansion saturates one instant, ``STEP`` moves to
the next one, and ``LOOP``/``PRUNE`` close branches that revisit a node.

Besides ``delta`` (the formulas still to be processed) every constraint set
keeps ``seen``: everything that held in that set during the current instant.
``seen`` stops saturation from re-adding formulas that were already expanded,
and becomes the atom of the set when a branch is turned into a pre-model.

X-eventualities (``X(a U b)`` and ``X F a``) are tracked per set identity.
A request made at a step node is fulfilled once the until/eventually rule picks
its fulfilling alternative on the same identity; when ``DIA2`` absorbs a set,
its open requests move to the absorbing set.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .formula import (
    UNIVERSAL, BOTTOM, Always, And, Box, Diamond, Eventually, Formula, NegProp, Next, Or,
    ProblemSpec, Prop, Release, Until, render, size_set, sort_key,
)
from .semantics import LassoSequence, LassoStructure, satisfies_spec

log = logging.getLogger(__name__)

RULE_ORDER = ("CON", "ALW", "BOX1", "DIA1", "BOX2", "DIA2", "DIS", "UNT", "REL", "EVE")
DISPLAY_NAMES = {"BOX1": "BOX¹", "BOX2": "BOX²", "DIA1": "DIA¹", "DIA2": "DIA²"}

Encoding = frozenset  # of standpoint names
Ident = tuple  # (encoding, label or None)


class NotApplicable(ValueError):
    pass


class NotPoised(ValueError):
    pass


class ExtractionError(AssertionError):
    """An accepted branch did not yield a model; always an implementation bug."""


# -- constraint sets ------------------------------------------------------------

def enc_str(enc: Encoding) -> str:
    names = sorted(enc, key=lambda s: (s != UNIVERSAL, s))
    return "{" + ",".join(names) + "}"


def _enc_order(enc: Encoding):
    return (len(enc), sorted(enc))


@dataclass(frozen=True)
class ConstraintSet:
    enc: Encoding
    label: int | None
    delta: frozenset[Formula]
    seen: frozenset[Formula]

    @property
    def ident(self) -> Ident:
        return (self.enc, self.label)

    @property
    def is_box(self) -> bool:
        return self.label is None

    @property
    def inert(self) -> bool:
        """An emptied diamond set: it stands for its box set until it is dropped."""
        return self.label is not None and not self.delta

    def add(self, formulas: Iterable[Formula]) -> ConstraintSet:
        new = frozenset(f for f in formulas if f not in self.seen)
        if not new:
            return self
        return replace(self, delta=self.delta | new, seen=self.seen | new)

    def without(self, f: Formula) -> ConstraintSet:
        return replace(self, delta=self.delta - {f})

    def sorted_delta(self) -> list[Formula]:
        return sorted(self.delta, key=sort_key)

    def literals(self) -> frozenset[str]:
        return frozenset(f.name for f in self.delta if isinstance(f, Prop))

    def render(self, labels: dict | None = None) -> str:
        lab = "⊥" if self.label is None else f"ℓ{(labels or {}).get(self.label, self.label)}"
        body = ", ".join(render(f) for f in self.sorted_delta())
        return f"({enc_str(self.enc)}; {lab}) {{{body}}}"


def _set_order(c: ConstraintSet):
    if c.label is None:
        return (0, _enc_order(c.enc))
    return (1, c.label)


@dataclass(frozen=True)
class NodeConstraintSet:
    sets: tuple[ConstraintSet, ...]
    next_label: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(sorted(self.sets, key=_set_order)))

    def get(self, ident: Ident) -> ConstraintSet | None:
        for c in self.sets:
            if c.ident == ident:
                return c
        return None

    def box(self, enc: Encoding) -> ConstraintSet:
        c = self.get((enc, None))
        if c is None:
            raise KeyError(f"no box set for {enc_str(enc)}")
        return c

    def put(self, c: ConstraintSet) -> NodeConstraintSet:
        return replace(self, sets=tuple(x for x in self.sets if x.ident != c.ident) + (c,))

    def drop(self, ident: Ident) -> NodeConstraintSet:
        return replace(self, sets=tuple(x for x in self.sets if x.ident != ident))

    def key(self) -> frozenset:
        """Label-blind identity used by LOOP and PRUNE; emptied diamond sets are ignored."""
        return frozenset((c.enc, c.delta) for c in self.sets if not c.inert)

    def __eq__(self, other):
        if not isinstance(other, NodeConstraintSet):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def is_empty(self) -> bool:
        return all(not c.delta for c in self.sets)

    def check_well_formed(self, encodings: Iterable[Encoding]) -> None:
        boxes = [c.enc for c in self.sets if c.is_box]
        if sorted(map(_enc_order, boxes)) != sorted(map(_enc_order, set(encodings))):
            raise AssertionError("node must hold exactly one box set per standpoint encoding")
        labels = [c.label for c in self.sets if not c.is_box]
        if len(labels) != len(set(labels)):
            raise AssertionError("labels must be unique")

    def render(self, labels: dict | None = None) -> str:
        return ", ".join(c.render(labels) for c in self.sets)


def contradictory(node: NodeConstraintSet) -> bool:
    for c in node.sets:
        if BOTTOM in c.delta:
            return True
        for f in c.delta:
            if isinstance(f, Prop) and NegProp(f.name) in c.delta:
                return True
    return False


def is_x_eventuality(f: Formula) -> bool:
    return isinstance(f, Next) and isinstance(f.arg, (Until, Eventually))


def requests(node: NodeConstraintSet) -> frozenset:
    """(identity, X-eventuality) pairs pending at a poised node."""
    return frozenset((c.ident, f) for c in node.sets if not c.inert
                     for f in c.delta if is_x_eventuality(f))


# -- encodings and initialisation ----------------------------------------------

def encodings(spec: ProblemSpec) -> dict[str, Encoding]:
    """Standpoint name -> the standpoints it is committed to (reflexive, transitive, with ``*``)."""
    above: dict[str, set[str]] = {s: set() for s in spec.vocab.standpoints}
    for e in spec.orderings:
        above.setdefault(e.sharper, set()).add(e.broader)
        above.setdefault(e.broader, set())
    result = {}
    for s in above:
        reach, todo = {s}, [s]
        while todo:
            for t in above[todo.pop()]:
                if t not in reach:
                    reach.add(t)
                    todo.append(t)
        result[s] = frozenset(reach | {UNIVERSAL})
    return result


def init_root(spec: ProblemSpec) -> NodeConstraintSet:
    enc = encodings(spec)
    phi = frozenset(spec.formulas)
    sets = [ConstraintSet(enc[UNIVERSAL], 0, phi, phi)]
    sets += [ConstraintSet(e, None, frozenset(), frozenset()) for e in set(enc.values())]
    return NodeConstraintSet(tuple(sets), next_label=1)


# -- rules ----------------------------------------------------------------------

@dataclass(frozen=True)
class RuleInstance:
    rule: str
    ident: Ident
    formula: Formula | None = None
    other: Ident | None = None

    def describe(self) -> str:
        name = DISPLAY_NAMES.get(self.rule, self.rule)
        return name if self.formula is None else f"{name} {render(self.formula)}"


@dataclass(frozen=True)
class Child:
    node: NodeConstraintSet
    fulfils: tuple = ()   # (ident, X-eventuality)
    merges: tuple = ()    # (victim ident, absorber ident)
    note: str = ""


_TABLE_TYPES = {"CON": And, "ALW": Always, "BOX1": Box, "DIA1": Diamond,
                "DIS": Or, "UNT": Until, "REL": Release, "EVE": Eventually}


def _first_formula(node: NodeConstraintSet, cls) -> RuleInstance | None:
    for c in node.sets:
        hits = [f for f in c.delta if isinstance(f, cls)]
        if hits:
            return c, min(hits, key=sort_key)
    return None


def _find_box2(node: NodeConstraintSet) -> RuleInstance | None:
    for c in node.sets:
        if not c.is_box:
            continue
        for d in node.sets:
            if d is c or d.inert or not (c.enc <= d.enc):
                continue
            if not c.seen <= d.seen:
                return RuleInstance("BOX2", c.ident, None, d.ident)
    return None


def _find_dia2(node: NodeConstraintSet) -> RuleInstance | None:
    victims = sorted((c for c in node.sets if not c.is_box and c.delta), key=lambda c: -c.label)
    for v in victims:
        for a in node.sets:
            if a is not v and a.enc == v.enc and v.delta <= a.delta:
                return RuleInstance("DIA2", v.ident, None, a.ident)
    return None


def select_rule(node: NodeConstraintSet) -> RuleInstance | None:
    """First applicable rule under the fixed priority, or ``None`` if the node is poised."""
    for rule in RULE_ORDER:
        if rule == "BOX2":
            inst = _find_box2(node)
        elif rule == "DIA2":
            inst = _find_dia2(node)
        else:
            hit = _first_formula(node, _TABLE_TYPES[rule])
            inst = RuleInstance(rule, hit[0].ident, hit[1]) if hit else None
        if inst is not None:
            return inst
    return None


def is_poised(node: NodeConstraintSet) -> bool:
    return select_rule(node) is None


def _alternatives(node, c, f, gamma1, gamma2, fulfil=None) -> list[Child]:
    """Children for a one- or two-way expansion rule; an alternative already contained in ``seen``
    makes the other one redundant."""
    base = c.without(f)
    fulfils = ((c.ident, fulfil),) if fulfil is not None else ()
    if set(gamma1) <= c.seen:
        return [Child(node.put(base.add(gamma1)), fulfils)]
    if gamma2 is None:
        return [Child(node.put(base.add(gamma1)), fulfils)]
    if fulfil is None and set(gamma2) <= c.seen:
        return [Child(node.put(base.add(gamma2)))]
    return [Child(node.put(base.add(gamma1)), fulfils), Child(node.put(base.add(gamma2)))]


def expand(node: NodeConstraintSet, inst: RuleInstance, enc: dict[str, Encoding]) -> list[Child]:
    """Children of ``node`` under ``inst`` (one or two)."""
    c = node.get(inst.ident)
    if c is None:
        raise NotApplicable(f"{inst.describe()}: no such constraint set")
    f = inst.formula
    if inst.rule in _TABLE_TYPES and (f is None or f not in c.delta):
        raise NotApplicable(f"{inst.describe()}: formula not present")

    if inst.rule == "CON":
        return _alternatives(node, c, f, [f.left, f.right], None)
    if inst.rule == "ALW":
        return _alternatives(node, c, f, [f.arg, Next(f)], None)
    if inst.rule == "DIS":
        return _alternatives(node, c, f, [f.left], [f.right])
    if inst.rule == "UNT":
        return _alternatives(node, c, f, [f.right], [f.left, Next(f)], fulfil=Next(f))
    if inst.rule == "REL":
        return _alternatives(node, c, f, [f.left, f.right], [f.right, Next(f)])
    if inst.rule == "EVE":
        return _alternatives(node, c, f, [f.arg], [Next(f)], fulfil=Next(f))

    if inst.rule == "BOX1":
        target_enc = enc[f.standpoint]
        n = node.put(c.without(f))
        n = n.put(n.box(target_enc).add([f.arg]))
        # The alternative child that empties a box set's standpoint is closed at once.
        note = "second child {⊥} closed by CONTRADICTION" if c.is_box else ""
        return [Child(n, note=note)]

    if inst.rule == "DIA1":
        target_enc = enc[f.standpoint]
        n = node.put(c.without(f))
        candidates = [d for d in n.sets if d.enc == target_enc and f.arg in d.seen]
        if candidates:
            return [Child(n, note=f"reuses {candidates[0].render()}")]
        fresh = ConstraintSet(target_enc, n.next_label, frozenset([f.arg]), frozenset([f.arg]))
        n = replace(n.put(fresh), next_label=n.next_label + 1)
        return [Child(n)]

    if inst.rule == "BOX2":
        d = node.get(inst.other)
        if not c.is_box or d is None or d.inert or not c.enc <= d.enc or c.seen <= d.seen:
            raise NotApplicable(inst.describe())
        return [Child(node.put(d.add(sorted(c.seen - d.seen, key=sort_key))))]

    if inst.rule == "DIA2":
        a = node.get(inst.other)
        if c.is_box or a is None or a.enc != c.enc or not c.delta <= a.delta:
            raise NotApplicable(inst.describe())
        n = node.drop(c.ident).put(replace(a, seen=a.seen | c.seen))
        return [Child(n, merges=((c.ident, a.ident),))]

    raise NotApplicable(f"unknown rule {inst.rule}")


def step(node: NodeConstraintSet) -> NodeConstraintSet:
    """Advance to the next instant: keep the arguments of next-formulas."""
    if select_rule(node) is not None:
        raise NotPoised("STEP needs a poised node")
    out = []
    for c in node.sets:
        if not c.is_box and not c.delta:
            continue
        nxt = frozenset(f.arg for f in c.delta if isinstance(f, Next))
        out.append(ConstraintSet(c.enc, c.label, nxt, nxt))
    return NodeConstraintSet(tuple(out), node.next_label)


# -- branches -------------------------------------------------------------------

@dataclass(frozen=True)
class StepRecord:
    """A poised node on the branch together with the bookkeeping for its instant."""
    position: int                 # index of the node on the branch
    node: NodeConstraintSet
    merges: tuple                 # DIA2 merges performed while saturating this instant
    fulfilled: frozenset          # (ident, X-eventuality) fulfilled while saturating it
    requests: frozenset
    snapshots: tuple = ()         # (earlier record index, canonical keys fulfilled since it)

    def canon(self, reqs: Iterable) -> frozenset:
        content = {c.ident: (c.enc, c.delta) for c in self.node.sets}
        return frozenset((content[i], f) for i, f in reqs)


@dataclass(frozen=True)
class _NodeLink:
    node: NodeConstraintSet
    rule: str
    node_id: int
    parent: _NodeLink | None
    depth: int


@dataclass(frozen=True)
class BranchState:
    """Persistent per-branch state carried through the depth-first search."""
    link: _NodeLink
    steps: tuple = ()            # StepRecord per earlier step node
    pending: tuple = ()          # open requests of each step record
    merges: tuple = ()           # current instant
    fulfilled: frozenset = frozenset()

    @property
    def node(self) -> NodeConstraintSet:
        return self.link.node

    def apply(self, child: Child, rule: str, node_id: int) -> BranchState:
        pending = self.pending
        for ident, evt in child.fulfils:
            pending = tuple(p - {(ident, evt)} if (ident, evt) in p else p for p in pending)
        for victim, absorber in child.merges:
            pending = tuple(
                frozenset((absorber if i == victim else i, e) for i, e in p)
                if any(i == victim for i, _ in p) else p for p in pending)
        link = _NodeLink(child.node, rule, node_id, self.link, self.link.depth + 1)
        return replace(self, link=link, pending=pending,
                       merges=self.merges + child.merges,
                       fulfilled=self.fulfilled | frozenset(child.fulfils))

    def record(self) -> StepRecord:
        node = self.node
        reqs = requests(node)
        key = node.key()
        rec = StepRecord(self.link.depth, node, self.merges, self.fulfilled, reqs)
        snaps = tuple((i, r.canon(r.requests - self.pending[i]))
                      for i, r in enumerate(self.steps) if r.node.key() == key)
        return replace(rec, snapshots=snaps)

    def stepped(self, node_id: int) -> BranchState:
        rec = self.record()
        link = _NodeLink(step(self.node), "STEP", node_id, self.link, self.link.depth + 1)
        return BranchState(link, self.steps + (rec,), self.pending + (rec.requests,), (), frozenset())

    def nodes(self) -> list[_NodeLink]:
        out, link = [], self.link
        while link is not None:
            out.append(link)
            link = link.parent
        return out[::-1]


@dataclass(frozen=True)
class Terminal:
    status: str          # "ticked", "crossed", "continue"
    rule: str = ""
    anchor: int | None = None


def check_terminal(state: BranchState) -> Terminal:
    node = state.node
    if contradictory(node):
        return Terminal("crossed", "CONTRADICTION")
    if node.is_empty():
        return Terminal("ticked", "EMPTY")
    if not is_poised(node):
        return Terminal("continue")
    key = node.key()
    same = [i for i, r in enumerate(state.steps) if r.node.key() == key]
    for i in same:
        if not state.pending[i]:
            return Terminal("ticked", "LOOP", anchor=i)
    for j in same:
        rec = state.steps[j]
        later = rec.canon(rec.requests - state.pending[j])
        for i, earlier in rec.snapshots:
            if later <= earlier:
                return Terminal("crossed", "PRUNE", anchor=i)
    return Terminal("continue")


@dataclass
class Branch:
    """An accepted branch: its nodes, step nodes, and eventuality ledger."""
    nodes: list[tuple[int, str, NodeConstraintSet]]
    step_indices: list[int]
    fulfilled: list[frozenset]
    steps: list[StepRecord]        # one per step node, the leaf included
    accepted_by: str
    anchor: int | None             # LOOP anchor (index into ``steps``); None for EMPTY

    @classmethod
    def from_state(cls, state: BranchState, term: Terminal) -> Branch:
        links = state.nodes()
        leaf = state.record()
        steps = list(state.steps) + [leaf]
        return cls(nodes=[(l.node_id, l.rule, l.node) for l in links],
                   step_indices=[r.position for r in steps],
                   fulfilled=[r.fulfilled for r in steps],
                   steps=steps, accepted_by=term.rule, anchor=term.anchor)

    def __len__(self) -> int:
        return len(self.nodes)

    def rules(self) -> list[str]:
        return [rule for _, rule, _ in self.nodes[1:]] + [self.accepted_by]


# -- search -------------------------------------------------------------------

@dataclass(frozen=True)
class SearchLimits:
    max_nodes: int | None = None
    max_depth: int | None = None


@dataclass
class Stats:
    nodes: int = 0
    crossed: int = 0
    max_branch: int = 0          # nodes on the longest branch
    max_instants: int = 0        # step nodes (instants) on the longest branch
    by_rule: dict = field(default_factory=dict)

    def merge(self, other: Stats) -> None:
        self.nodes += other.nodes
        self.crossed += other.crossed
        self.max_branch = max(self.max_branch, other.max_branch)
        self.max_instants = max(self.max_instants, other.max_instants)
        for k, v in other.by_rule.items():
            self.by_rule[k] = self.by_rule.get(k, 0) + v


@dataclass
class Verdict:
    status: str                     # "SAT", "UNSAT", "LIMIT"
    model: LassoStructure | None = None
    branch: Branch | None = None
    stats: Stats = field(default_factory=Stats)
    reason: str = ""

    @property
    def sat(self) -> bool:
        return self.status == "SAT"


@dataclass(frozen=True)
class TraceEvent:
    node_id: int
    parent_id: int | None
    rule: str
    node: NodeConstraintSet | None
    note: str = ""

    def to_json(self) -> dict:
        out = {"node": self.node_id, "parent": self.parent_id, "rule": self.rule}
        if self.node is not None:
            out["sets"] = [c.render() for c in self.node.sets]
        if self.note:
            out["note"] = self.note
        return out

    def to_text(self) -> str:
        name = DISPLAY_NAMES.get(self.rule, self.rule)
        parent = "-" if self.parent_id is None else str(self.parent_id)
        body = self.node.render() if self.node is not None else ""
        line = f"{self.node_id:>4} <- {parent:>4}  {name:<13} {body}".rstrip()
        return f"{line}  [{self.note}]" if self.note else line


class _Search:
    def __init__(self, spec: ProblemSpec, limits: SearchLimits, trace: Callable | None, first_id: int = 0):
        self.spec = spec
        self.enc = encodings(spec)
        self.limits = limits
        self.trace = trace
        self.stats = Stats()
        self.next_id = first_id
        self.cut = False

    def new_id(self) -> int:
        self.next_id += 1
        return self.next_id - 1

    def emit(self, *args, **kw):
        if self.trace is not None:
            self.trace(TraceEvent(*args, **kw))

    def root(self) -> BranchState:
        node = init_root(self.spec)
        nid = self.new_id()
        self.stats.nodes += 1
        self.emit(nid, None, "INIT", node)
        return BranchState(_NodeLink(node, "INIT", nid, None, 1))

    def children(self, state: BranchState) -> list[BranchState] | Verdict | None:
        """Successors of a branch in left-to-right order, or a SAT verdict, or None when closed."""
        self.stats.max_branch = max(self.stats.max_branch, state.link.depth)
        self.stats.max_instants = max(self.stats.max_instants, len(state.steps) + 1)
        term = check_terminal(state)
        nid = state.link.node_id
        if term.status == "crossed":
            self.stats.crossed += 1
            self.emit(nid, nid, term.rule, None, note="crossed")
            return None
        if term.status == "ticked":
            self.emit(nid, nid, term.rule, None, note="ticked")
            branch = Branch.from_state(state, term)
            try:
                model = extract_model(branch, self.spec)
            except InfiniteModelRequired as exc:
                return Verdict("SAT", None, branch, self.stats, reason=str(exc))
            return Verdict("SAT", model, branch, self.stats)
        if self.limits.max_depth is not None and state.link.depth >= self.limits.max_depth:
            self.cut = True
            return None
        inst = select_rule(state.node)
        out = []
        if inst is None:
            cid = self.new_id()
            child = state.stepped(cid)
            self.emit(cid, nid, "STEP", child.node)
            out.append(child)
        else:
            for ch in expand(state.node, inst, self.enc):
                cid = self.new_id()
                self.emit(cid, nid, inst.rule, ch.node, note=ch.note)
                out.append(state.apply(ch, inst.rule, cid))
        self.stats.nodes += len(out)
        rule = "STEP" if inst is None else inst.rule
        self.stats.by_rule[rule] = self.stats.by_rule.get(rule, 0) + 1
        return out

    def run(self, start: list[BranchState]) -> Verdict:
        stack = list(reversed(start))
        while stack:
            if self.limits.max_nodes is not None and self.stats.nodes > self.limits.max_nodes:
                return Verdict("LIMIT", stats=self.stats, reason=f"node limit {self.limits.max_nodes} reached")
            res = self.children(stack.pop())
            if isinstance(res, Verdict):
                return res
            if res:
                stack.extend(reversed(res))
        if self.cut:
            return Verdict("LIMIT", stats=self.stats, reason=f"depth limit {self.limits.max_depth} reached")
        return Verdict("UNSAT", stats=self.stats)

    def frontier(self, want: int) -> list[BranchState] | Verdict:
        """Expand breadth-first (in DFS order) until ``want`` open branches exist."""
        layer = [self.root()]
        while 0 < len(layer) < want:
            nxt = []
            progressed = False
            for st in layer:
                res = self.children(st)
                if isinstance(res, Verdict):
                    # A branch closed successfully before the split: every branch
                    # left of it in DFS order is still open, so search those first.
                    left = layer[:layer.index(st)]
                    verdict = self.run(nxt + left) if (nxt or left) else None
                    return verdict if verdict is not None and verdict.sat else res
                if res:
                    nxt.extend(res)
                    progressed = True
            layer = nxt
            if not progressed:
                break
        return layer


def _solve_subtree(args) -> Verdict:
    spec, limits, state = args
    return _Search(spec, limits, None).run([state])


def solve(spec: ProblemSpec, limits: SearchLimits | None = None,
          trace: Callable[[TraceEvent], None] | None = None, jobs: int = 1) -> Verdict:
    """Decide ``spec`` by depth-first, left-child-first search."""
    limits = limits or SearchLimits()
    search = _Search(spec, limits, trace)
    if jobs <= 1 or trace is not None:
        return search.run([search.root()])
    front = search.frontier(jobs * 4)
    if isinstance(front, Verdict):
        return front
    if not front:
        return Verdict("UNSAT", stats=search.stats)
    stats = search.stats
    limited = None
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for verdict in pool.map(_solve_subtree, [(spec, limits, st) for st in front]):
            stats.merge(verdict.stats)
            if verdict.sat:
                verdict.stats = stats
                return verdict
            if verdict.status == "LIMIT" and limited is None:
                limited = verdict
    if limited is not None:
        limited.stats = stats
        return limited
    return Verdict("UNSAT", stats=stats)


# -- model extraction -----------------------------------------------------------

class InfiniteModelRequired(ExtractionError):
    """The accepted branch needs a fresh precisification at every lap of its loop,
    so it describes no structure with finitely many sequences."""


State = tuple  # (time, identity)


@dataclass(frozen=True)
class Run:
    """A lasso over branch positions: ``prefix`` once, then ``cycle`` forever."""
    enc: Encoding
    prefix: tuple
    cycle: tuple


class Skeleton:
    """The lasso of step nodes of an accepted branch and the runs through it.

    Times ``0..m`` are the step nodes; after ``m`` time continues at
    ``loop_start`` (the node after the LOOP anchor, or ``m`` itself for EMPTY).
    A run state is a ``(time, identity)`` pair naming a constraint set.  Its
    natural successor follows the identity (through DIA2 merges and the LOOP
    wrap-around).  A run may also move to any other set of the same encoding
    whose content holds all of its next-formula arguments: box sets copy their
    content into every set of a finer encoding, so such a move never loses an
    obligation.

    An emptied diamond set only held formulas true on every sequence at that
    instant.  Its content is completed with that of its box set, and its
    natural successor is the box set.
    """

    def __init__(self, branch: Branch):
        self.branch = branch
        self.steps = branch.steps
        self.m = len(self.steps) - 1
        self.loop_start = self.m if branch.anchor is None else branch.anchor + 1
        self.period = self.m - self.loop_start + 1
        self.merge_maps = [dict(r.merges) for r in self.steps]
        if branch.anchor is not None:
            anchor = self.steps[branch.anchor].node
            by_content = {(c.enc, c.delta): c.ident for c in anchor.sets if not c.inert}
            self.wrap = {c.ident: by_content[(c.enc, c.delta)]
                         for c in self.steps[-1].node.sets if not c.inert}
        else:
            self.wrap = None
        self._runs: dict[bool, list[Run]] = {}

    # positions

    def set_at(self, t: int, ident: Ident) -> ConstraintSet:
        c = self.steps[t].node.get(ident)
        if c is None:
            raise ExtractionError(f"identity {ident} missing at step {t}")
        return c

    def states_at(self, t: int) -> list[State]:
        return [(t, c.ident) for c in self.steps[t].node.sets]

    def atom(self, state: State) -> frozenset[Formula]:
        """Everything that holds in the set at that time."""
        t, ident = state
        c = self.set_at(t, ident)
        if c.inert:
            return c.seen | self.steps[t].node.box(c.enc).seen
        return c.seen

    def literals(self, state: State) -> frozenset[str]:
        return frozenset(f.name for f in self.atom(state) if isinstance(f, Prop))

    def next_args(self, state: State) -> frozenset[Formula]:
        t, ident = state
        c = self.set_at(t, ident)
        if c.inert:
            c = self.steps[t].node.box(c.enc)
        return frozenset(f.arg for f in c.delta if isinstance(f, Next))

    def next_time(self, t: int) -> int:
        return t + 1 if t < self.m else self.loop_start

    def time_of(self, n: int) -> int:
        if n <= self.m:
            return n
        return self.loop_start + (n - self.loop_start) % self.period

    def resolve(self, t: int, ident: Ident) -> Ident:
        merges = self.merge_maps[t]
        seen = set()
        while ident in merges:
            if ident in seen:
                raise ExtractionError("cyclic merge chain")
            seen.add(ident)
            ident = merges[ident]
        self.set_at(t, ident)
        return ident

    def succ(self, state: State) -> State:
        """The natural successor: same identity at the next time."""
        t, ident = state
        if self.set_at(t, ident).inert:
            return (self.next_time(t), (ident[0], None))
        if t < self.m:
            return (t + 1, self.resolve(t + 1, ident))
        if self.wrap is None:
            return (t, (ident[0], None))
        return (self.loop_start, self.resolve(self.loop_start, self.wrap[ident]))

    def options(self, state: State) -> list[State]:
        """Every admissible successor, the natural one first."""
        t, ident = state
        nat = self.succ(state)
        args = self.next_args(state)
        nt = self.next_time(t)
        rest = [s for s in self.states_at(nt)
                if s != nat and s[1][0] == ident[0] and args <= self.atom(s)]
        return [nat] + rest

    def content(self, state: State) -> ConstraintSet:
        return self.set_at(*state)

    # runs

    def _walk(self, start: State) -> tuple[list, list]:
        index: dict = {}
        states = []
        cur = start
        while cur not in index:
            index[cur] = len(states)
            states.append(cur)
            cur = self.succ(cur)
        k = index[cur]
        return states[:k], states[k:]

    def _cycle_through(self, x: State) -> list | None:
        """Shortest-deviation cycle from ``x`` back to ``x`` (0-1 BFS: natural moves are free)."""
        from collections import deque
        dist = {}
        parent = {}
        dq = deque()
        for i, s in enumerate(self.options(x)):
            w = 0 if i == 0 else 1
            if s not in dist or w < dist[s]:
                dist[s], parent[s] = w, None
                (dq.appendleft if w == 0 else dq.append)((w, s))
        done = set()
        while dq:
            d, s = dq.popleft()
            if s in done or d > dist[s]:
                continue
            done.add(s)
            if s == x:
                path = []
                while s is not None:
                    path.append(s)
                    s = parent[s]
                path.reverse()
                return [x] + path[:-1]
            for i, nxt in enumerate(self.options(s)):
                nd = d + (0 if i == 0 else 1)
                if nxt not in dist or nd < dist[nxt]:
                    dist[nxt], parent[nxt] = nd, s
                    (dq.appendleft if i == 0 else dq.append)((nd, nxt))
        return None

    def _box_prefix(self, enc: Encoding, length: int) -> tuple:
        return tuple((self.time_of(n), (enc, None)) for n in range(length))

    def _rotations(self, enc: Encoding, entry_time: int, cycle: list) -> list[Run]:
        """The run entering ``cycle`` at ``entry_time`` plus its copies shifted by whole laps,
        so that every lap of the loop meets every state of the cycle."""
        laps = max(1, len(cycle) // self.period) if self.period else 1
        return [Run(enc, self._box_prefix(enc, entry_time + j * self.period), tuple(cycle))
                for j in range(laps)]

    def runs(self, cover_emptied: bool = False) -> list[Run]:
        """Runs through every diamond set on every lap (and through emptied ones
        too with ``cover_emptied``), the run of the input formulas first."""
        if cover_emptied in self._runs:
            return self._runs[cover_emptied]
        runs: list[Run] = []
        covered: set = set()

        def add(new: list[Run]):
            for r in new:
                runs.append(r)
                # A loop state is only covered on every lap when it lies on a cycle.
                covered.update(s for s in r.prefix if s[0] < self.loop_start)
                covered.update(r.cycle)

        def from_walk(enc, entry_time, start):
            pre, cyc = self._walk(start)
            head = Run(enc, self._box_prefix(enc, entry_time) + tuple(pre), tuple(cyc))
            add([head])
            cycle_entry = entry_time + len(pre)
            add(self._rotations(enc, cycle_entry, cyc)[1:])

        root_ident = next(c.ident for c in self.branch.nodes[0][2].sets if c.label == 0)
        main = (0, self.resolve(0, root_ident))
        from_walk(main[1][0], 0, main)

        for t in range(self.m + 1):
            for x in self.states_at(t):
                if x[1][1] is None or x in covered:
                    continue
                if not cover_emptied and self.content(x).inert:
                    continue
                enc = x[1][0]
                if t < self.loop_start:
                    from_walk(enc, t, x)
                    continue
                cyc = self._cycle_through(x)
                if cyc is None:
                    raise InfiniteModelRequired(
                        f"the diamond set {self.content(x).render()} at step {t} can be revisited "
                        "on no later lap, so every lap needs a new precisification")
                add(self._rotations(enc, t, cyc))
        self._runs[cover_emptied] = runs
        return runs

    def box_run(self, enc: Encoding) -> Run:
        pre, cyc = self._walk((0, (enc, None)))
        return Run(enc, tuple(pre), tuple(cyc))


def extract_model(branch: Branch, spec: ProblemSpec) -> LassoStructure:
    """Ultimately periodic structure read off an accepted branch.

    The first sequence is the one the input formulas were placed on.
    Raises :class:`InfiniteModelRequired` when the branch only describes
    structures with infinitely many sequences.
    """
    sk = Skeleton(branch)
    enc = encodings(spec)
    runs = list(sk.runs())
    for s, e in sorted(enc.items()):
        if not any(s in r.enc for r in runs):
            runs.append(sk.box_run(e))

    def states(part):
        return tuple(sk.literals(s) for s in part)

    seqs: list[LassoSequence] = []
    members: list[set] = []
    for run in runs:
        seq = LassoSequence(states(run.prefix), states(run.cycle)).normalized()
        if seq in seqs:
            members[seqs.index(seq)] |= run.enc
        else:
            seqs.append(seq)
            members.append(set(run.enc))
    lam = {s: frozenset(i for i, m in enumerate(members) if s in m) for s in spec.vocab.standpoints}
    model = LassoStructure(tuple(seqs), lam)
    if not satisfies_spec(model, 0, spec):
        raise ExtractionError(f"extracted structure does not satisfy {spec}: {model.dumps()}")
    return model


def branch_length_bound(spec: ProblemSpec) -> int:
    return 2 ** size_set(spec.formulas)
