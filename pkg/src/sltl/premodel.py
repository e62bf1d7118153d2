"""Pre-models: timestamps of indexed atoms plus runs threading through them.

A pre-model is the finite certificate standing between an accepted tableau
branch and a structure.  :func:`validate_premodel` checks every condition a
pre-model must meet and reports violations with witnesses;
:func:`branch_to_premodel` and :func:`premodel_to_model` convert from and to
the other representations, and :func:`model_to_premodel` goes the other way,
reading atoms off a structure.

Atoms are saturated under the expansion alternatives of each formula
(``a & b`` needs both, ``a | b`` one side, ``a U b`` either ``b`` or
``a, X(a U b)``, and so on) and must be free of literal clashes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from .formula import (
    UNIVERSAL, Always, And, Bottom, Box, Diamond, Eventually, Formula, NegProp, Next, Or,
    ProblemSpec, Prop, Release, Until, closure, render, sort_key,
)
from .semantics import Evaluator, LassoSequence, LassoStructure, StructureError, satisfies_spec
from .tableau import Branch, Encoding, Skeleton, encodings, enc_str

AtomKey = tuple  # (encoding, label or None)


class InvalidPreModel(ValueError):
    pass


@dataclass(frozen=True)
class IndexedAtom:
    enc: Encoding
    label: int | None
    delta: frozenset[Formula]

    @property
    def key(self) -> AtomKey:
        return (self.enc, self.label)

    def describe(self) -> str:
        lab = "⊥" if self.label is None else f"ℓ{self.label}"
        return f"({enc_str(self.enc)}; {lab})"

    def to_json(self) -> dict:
        return {"enc": sorted(self.enc), "label": self.label,
                "delta": sorted(render(f) for f in self.delta)}


@dataclass(frozen=True)
class Timestamp:
    atoms: tuple[IndexedAtom, ...]

    def get(self, key: AtomKey) -> IndexedAtom | None:
        for a in self.atoms:
            if a.key == key:
                return a
        return None


@dataclass(frozen=True)
class PreModelRun:
    """Atom keys at absolute times ``0, 1, ...``: ``prefix`` once, then ``cycle`` repeated."""
    prefix: tuple[AtomKey, ...]
    cycle: tuple[AtomKey, ...]

    def at(self, n: int) -> AtomKey:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.cycle[(n - len(self.prefix)) % len(self.cycle)]

    def to_json(self) -> dict:
        def ref(k):
            return {"enc": sorted(k[0]), "label": k[1]}
        return {"prefix": [ref(k) for k in self.prefix], "cycle": [ref(k) for k in self.cycle]}


@dataclass(frozen=True)
class PreModel:
    """Timestamps ``prefix + loop``; the time after the last one is ``len(prefix)``."""
    prefix: tuple[Timestamp, ...]
    loop: tuple[Timestamp, ...]
    runs: tuple[PreModelRun, ...]

    @property
    def length(self) -> int:
        return len(self.prefix) + len(self.loop)

    def time_of(self, n: int) -> int:
        if n < len(self.prefix):
            return n
        return len(self.prefix) + (n - len(self.prefix)) % len(self.loop)

    def timestamp(self, n: int) -> Timestamp:
        t = self.time_of(n)
        return self.prefix[t] if t < len(self.prefix) else self.loop[t - len(self.prefix)]

    def atom(self, run: PreModelRun, n: int) -> IndexedAtom | None:
        return self.timestamp(n).get(run.at(n))

    def horizon(self) -> int:
        """Absolute times after which every run and the timestamps repeat with one period."""
        start = max([len(self.prefix)] + [len(r.prefix) for r in self.runs])
        period = math.lcm(len(self.loop), *(len(r.cycle) for r in self.runs)) if self.runs else len(self.loop)
        return start + period

    def check_structure(self) -> None:
        if not self.loop:
            raise StructureError("a pre-model needs a non-empty loop of timestamps")
        for r in self.runs:
            if not r.cycle:
                raise StructureError("a run needs a non-empty cycle")
            if len(r.cycle) % len(self.loop) != 0 or len(r.prefix) < len(self.prefix):
                raise StructureError("run cycle is not aligned with the timestamp loop")

    def to_json(self) -> dict:
        return {"prefix": [[a.to_json() for a in ts.atoms] for ts in self.prefix],
                "loop": [[a.to_json() for a in ts.atoms] for ts in self.loop],
                "runs": [r.to_json() for r in self.runs]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class Violation:
    condition: str
    time: int | None
    witness: str
    detail: str = ""

    def __str__(self) -> str:
        at = "" if self.time is None else f" at time {self.time}"
        return f"{self.condition}{at}: {self.witness} {self.detail}".rstrip()


@dataclass
class Report:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def conditions(self) -> set[str]:
        return {v.condition for v in self.violations}

    def __str__(self) -> str:
        return "valid" if self.ok else "\n".join(map(str, self.violations))


# -- the individual conditions ----------------------------------------------------

def alternatives(f: Formula) -> tuple[frozenset, frozenset] | None:
    """The two expansion alternatives of a formula; ``None`` for formulas without any."""
    if isinstance(f, And):
        return frozenset([f.left, f.right]), frozenset()
    if isinstance(f, Always):
        return frozenset([f.arg, Next(f)]), frozenset()
    if isinstance(f, Or):
        return frozenset([f.left]), frozenset([f.right])
    if isinstance(f, Until):
        return frozenset([f.right]), frozenset([f.left, Next(f)])
    if isinstance(f, Release):
        return frozenset([f.left, f.right]), frozenset([f.right, Next(f)])
    if isinstance(f, Eventually):
        return frozenset([f.arg]), frozenset([Next(f)])
    return None


def atom_problems(delta: frozenset, cl: frozenset) -> list[str]:
    out = []
    if not delta <= cl:
        out.append("outside the closure: " + ", ".join(sorted(render(f) for f in delta - cl)))
    if any(isinstance(f, Bottom) for f in delta):
        out.append("contains false")
    for f in delta:
        if isinstance(f, Prop) and NegProp(f.name) in delta:
            out.append(f"clash on {f.name}")
        alt = alternatives(f)
        if alt is not None:
            g1, g2 = alt
            if not (g1 <= delta or (g2 and g2 <= delta)):
                out.append(f"{render(f)} is not expanded")
    return out


def _finer(atom: IndexedAtom, enc: Encoding) -> bool:
    return enc <= atom.enc


def timestamp_problems(ts: Timestamp, enc: dict[str, Encoding], check_t3: bool = True) -> list[tuple[str, str, str]]:
    out = []
    for a in ts.atoms:
        for f in a.delta:
            if isinstance(f, Diamond):
                e = enc.get(f.standpoint)
                if e is None or not any(_finer(b, e) and f.arg in b.delta for b in ts.atoms):
                    out.append(("T1", a.describe(), f"{render(f)} has no witness"))
            elif isinstance(f, Box):
                e = enc.get(f.standpoint)
                for b in ts.atoms:
                    if e is not None and _finer(b, e) and f.arg not in b.delta:
                        out.append(("T2", a.describe(), f"{render(f)} fails in {b.describe()}"))
    if check_t3:
        for e in set(enc.values()):
            boxes = [a for a in ts.atoms if a.enc == e and a.label is None]
            meet = frozenset.intersection(*[b.delta for b in ts.atoms if _finer(b, e)]) \
                if any(_finer(b, e) for b in ts.atoms) else frozenset()
            if not boxes:
                out.append(("T3", enc_str(e), "no atom for this encoding"))
            elif boxes[0].delta != meet:
                out.append(("T3", boxes[0].describe(), "differs from the intersection of finer atoms"))
    return out


def _eventualities(delta) -> list[tuple[Formula | None, Formula]]:
    """(stay, goal) pairs for until and eventually formulas; ``stay=None`` means true."""
    out = []
    for f in delta:
        if isinstance(f, Until):
            out.append((f.left, f.right))
        elif isinstance(f, Eventually):
            out.append((None, f.arg))
    return out


def run_problems(pm: PreModel, index: int, run: PreModelRun) -> list[tuple[str, int, str, str]]:
    out = []
    h = pm.horizon()
    atoms = []
    for n in range(h + h):
        a = pm.atom(run, n)
        if a is None:
            out.append(("R0", n, f"run {index}", f"refers to a missing atom {run.at(n)}"))
            return out
        atoms.append(a)
    encs = {a.enc for a in atoms}
    if len(encs) > 1:
        out.append(("R1", None, f"run {index}", "changes standpoint encoding"))
    for n in range(h):
        for f in atoms[n].delta:
            if isinstance(f, Next) and f.arg not in atoms[n + 1].delta:
                out.append(("R2", n, f"run {index}", f"{render(f)} not honoured at the next time"))
        for stay, goal in _eventualities(atoms[n].delta):
            for j in range(n, n + h):
                if goal in atoms[j].delta:
                    break
                if stay is not None and stay not in atoms[j].delta:
                    out.append(("R3", n, f"run {index}", f"until broken before {render(goal)}"))
                    break
            else:
                out.append(("R3", n, f"run {index}", f"{render(goal)} never reached"))
    return out


def _p1(pm: PreModel, spec: ProblemSpec, enc: dict) -> bool:
    first = pm.timestamp(0)
    return any(a.enc == enc[UNIVERSAL] and set(spec.formulas) <= a.delta for a in first.atoms)


def coverage_problems(pm: PreModel) -> list[tuple[str, int, str, str]]:
    out = []
    for n in range(pm.horizon()):
        hit = {r.at(n) for r in pm.runs}
        for a in pm.timestamp(n).atoms:
            if a.key not in hit:
                out.append(("COVER", n, a.describe(), "no run passes through it"))
    return out


def validate_premodel(pm: PreModel, spec: ProblemSpec, *, check_t3: bool = True,
                      check_p1: bool = True, check_p2: bool = True, check_cover: bool = True) -> Report:
    """Every violated condition, with the time and atom or run that witnesses it."""
    pm.check_structure()
    enc = encodings(spec)
    cl = closure(spec)
    report = Report()
    times = pm.length
    for t in range(times):
        ts = pm.timestamp(t)
        for a in ts.atoms:
            for msg in atom_problems(a.delta, cl):
                report.violations.append(Violation("ATOM", t, a.describe(), msg))
        for cond, wit, msg in timestamp_problems(ts, enc, check_t3):
            report.violations.append(Violation(cond, t, wit, msg))
    for i, r in enumerate(pm.runs):
        for cond, n, wit, msg in run_problems(pm, i, r):
            report.violations.append(Violation(cond, n, wit, msg))
    if check_cover:
        for cond, n, wit, msg in coverage_problems(pm):
            report.violations.append(Violation(cond, n, wit, msg))
    if check_p1 and not _p1(pm, spec, enc):
        report.violations.append(Violation("P1", 0, "timestamp 0", "no universal atom holds every input formula"))
    if check_p2 and report.ok:
        for v in minimality_problems(pm, spec, enc, cl, check_t3):
            report.violations.append(v)
    return report


def _replace_atom(pm: PreModel, t: int, key: AtomKey, delta: frozenset) -> PreModel:
    def swap(ts: Timestamp) -> Timestamp:
        return Timestamp(tuple(IndexedAtom(a.enc, a.label, delta) if a.key == key else a for a in ts.atoms))
    if t < len(pm.prefix):
        prefix = pm.prefix[:t] + (swap(pm.prefix[t]),) + pm.prefix[t + 1:]
        return PreModel(prefix, pm.loop, pm.runs)
    k = t - len(pm.prefix)
    return PreModel(pm.prefix, pm.loop[:k] + (swap(pm.loop[k]),) + pm.loop[k + 1:], pm.runs)


def _droppable(pm: PreModel, spec: ProblemSpec, enc, cl, check_t3: bool,
               t: int, a: IndexedAtom, f: Formula) -> PreModel | None:
    """The pre-model with ``f`` removed from ``a``, if that breaks no condition."""
    smaller = a.delta - {f}
    if atom_problems(smaller, cl):
        return None
    alt = _replace_atom(pm, t, a.key, smaller)
    if timestamp_problems(alt.timestamp(t), enc, check_t3):
        return None
    if not _p1(alt, spec, enc):
        return None
    # Only runs through the modified atom can be affected.
    if any(run_problems(alt, i, r) for i, r in enumerate(pm.runs) if _touches(pm, r, t, a.key)):
        return None
    return alt


def _touches(pm: PreModel, r: PreModelRun, t: int, key: AtomKey) -> bool:
    return any(pm.time_of(n) == t and r.at(n) == key for n in range(pm.horizon()))


def minimality_problems(pm: PreModel, spec: ProblemSpec, enc, cl, check_t3: bool) -> list[Violation]:
    """Formulas that can be dropped from an atom without breaking anything."""
    out = []
    for t in range(pm.length):
        for a in pm.timestamp(t).atoms:
            for f in sorted(a.delta, key=sort_key):
                if _droppable(pm, spec, enc, cl, check_t3, t, a, f) is not None:
                    out.append(Violation("P2", t, a.describe(), f"{render(f)} is redundant"))
    return out


def minimize(pm: PreModel, spec: ProblemSpec) -> PreModel:
    """Drop formulas from atoms, largest first, while every condition keeps holding."""
    enc = encodings(spec)
    cl = closure(spec)
    changed = True
    while changed:
        changed = False
        for t in range(pm.length):
            for key in [a.key for a in pm.timestamp(t).atoms]:
                for f in sorted(pm.timestamp(t).get(key).delta, key=sort_key, reverse=True):
                    a = pm.timestamp(t).get(key)
                    alt = _droppable(pm, spec, enc, cl, True, t, a, f)
                    if alt is not None:
                        pm = alt
                        changed = True
    return pm


# -- conversions -----------------------------------------------------------------

def branch_to_premodel(branch: Branch, spec: ProblemSpec, minimal: bool = True) -> PreModel:
    """Atoms are the saturated sets of the step nodes; runs are those of model extraction,
    plus the box run of every encoding.  With ``minimal`` (the default), atoms are
    then shrunk by :func:`minimize`.

    """
    sk = Skeleton(branch)
    stamps = [Timestamp(tuple(IndexedAtom(c.enc, c.label, sk.atom((t, c.ident)))
                              for c in sk.steps[t].node.sets))
              for t in range(sk.m + 1)]
    runs = list(sk.runs(cover_emptied=True))
    for e in sorted(set(encodings(spec).values()), key=lambda e: (len(e), sorted(e))):
        runs.append(sk.box_run(e))
    pm_runs = [PreModelRun(tuple(i for _, i in r.prefix), tuple(i for _, i in r.cycle)) for r in runs]
    ls = sk.loop_start
    pm = PreModel(tuple(stamps[:ls]), tuple(stamps[ls:]), _dedupe(pm_runs))
    return minimize(pm, spec) if minimal else pm


def _dedupe(runs: Iterable[PreModelRun]) -> tuple[PreModelRun, ...]:
    return tuple(dict.fromkeys(runs))


def premodel_to_model(pm: PreModel, spec: ProblemSpec) -> LassoStructure:
    """One sequence per run (its positive literals); standpoints from the run encodings.
    The sequence of a run starting at a universal atom holding the input comes first."""
    report = validate_premodel(pm, spec, check_p2=False)
    if not report.ok:
        raise InvalidPreModel(str(report))
    enc = encodings(spec)

    def starts_p1(r):
        a = pm.atom(r, 0)
        return a.enc == enc[UNIVERSAL] and set(spec.formulas) <= a.delta

    runs = sorted(pm.runs, key=lambda r: not starts_p1(r))
    seqs: list[LassoSequence] = []
    members: list[set] = []
    for r in runs:
        def lits(n):
            return frozenset(f.name for f in pm.atom(r, n).delta if isinstance(f, Prop))
        seq = LassoSequence(tuple(lits(n) for n in range(len(r.prefix))),
                            tuple(lits(len(r.prefix) + n) for n in range(len(r.cycle)))).normalized()
        run_enc = pm.atom(r, 0).enc
        if seq in seqs:
            members[seqs.index(seq)] |= run_enc
        else:
            seqs.append(seq)
            members.append(set(run_enc))
    lam = {s: frozenset(i for i, m in enumerate(members) if s in m) for s in spec.vocab.standpoints}
    model = LassoStructure(tuple(seqs), lam)
    if not satisfies_spec(model, 0, spec):
        raise InvalidPreModel("the structure built from the pre-model does not satisfy the input")
    return model


def model_to_premodel(m: LassoStructure, spec: ProblemSpec) -> PreModel:
    """Atoms read off a structure: per sequence and time, the closure formulas that hold.

    A sequence's encoding is the set of standpoints whose interpretation contains it.
    No box atoms are built, so the result is only meant for the atom, T1, T2 and run
    conditions.
    """
    ev = Evaluator(m)
    cl = sorted(closure(spec), key=sort_key)
    tables = {f: ev.table(f) for f in cl}
    encs = [frozenset(s for s, ix in m.lam.items() if i in ix) for i in range(len(m.sequences))]
    stamps = []
    for n in range(ev.width):
        stamps.append(Timestamp(tuple(
            IndexedAtom(encs[i], i, frozenset(f for f in cl if tables[f][i][n]))
            for i in range(len(m.sequences)))))
    runs = tuple(PreModelRun(tuple((encs[i], i) for _ in range(ev.plen)),
                             tuple((encs[i], i) for _ in range(ev.llen)))
                 for i in range(len(m.sequences)))
    return PreModel(tuple(stamps[:ev.plen]), tuple(stamps[ev.plen:]), runs)


def run_graph(pm: PreModel) -> nx.DiGraph:
    """Successor graph of (time, atom key) pairs used by the runs."""
    g = nx.DiGraph()
    for r in pm.runs:
        h = pm.horizon()
        for n in range(h):
            g.add_edge((pm.time_of(n), r.at(n)), (pm.time_of(n + 1), r.at(n + 1)))
    return g


def recurring_atoms(pm: PreModel) -> set:
    """Atoms some run visits infinitely often: those on a cycle of the run graph."""
    g = run_graph(pm)
    out = set()
    for comp in nx.strongly_connected_components(g):
        if len(comp) > 1 or any(g.has_edge(v, v) for v in comp):
            out |= comp
    return out
