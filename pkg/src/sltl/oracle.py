"""Brute-force satisfiability over bounded lasso structures, and a differential harness.

The oracle never proves unsatisfiability: when nothing within the bounds
satisfies a problem it says so and nothing more.  Its value lies in being
independent of the tableau: it only enumerates structures and calls the
evaluator.
"""
from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .formula import (
    UNIVERSAL, Always, And, Box, Diamond, Eventually, Formula, NegProp, Next, Or,
    ProblemSpec, Prop, Release, StandpointExpression, Until, Vocabulary, size_set,
    walk,
)
from .semantics import Evaluator, LassoSequence, LassoStructure, satisfies_spec
from .tableau import ExtractionError, SearchLimits, solve


class BoundsTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleBounds:
    max_sequences: int = 2
    max_prefix: int = 1
    max_loop: int = 2
    prop_subset_limit: int | None = None
    cap: int = 2_000_000

    def __post_init__(self):
        if self.max_sequences < 1 or self.max_loop < 1 or self.max_prefix < 0:
            raise ValueError("need max_sequences >= 1, max_loop >= 1, max_prefix >= 0")


@dataclass(frozen=True)
class Found:
    structure: LassoStructure
    index: int

    found = True


@dataclass(frozen=True)
class NotFoundWithinBounds:
    bounds: OracleBounds
    examined: int

    found = False


def _states(props: Iterable[str], limit: int | None) -> list[frozenset]:
    props = sorted(props)
    out = [frozenset(c) for k in range(len(props) + 1) for c in itertools.combinations(props, k)]
    return out[:limit] if limit is not None else out


def _seq_key(s: LassoSequence):
    return (len(s.prefix) + len(s.loop), len(s.loop),
            [sorted(x) for x in s.prefix], [sorted(x) for x in s.loop])


def enumerate_sequences(props: Iterable[str], b: OracleBounds) -> list[LassoSequence]:
    """Every distinct normalized lasso within the bounds, shortest first."""
    states = _states(props, b.prop_subset_limit)
    seqs = set()
    for plen in range(b.max_prefix + 1):
        for llen in range(1, b.max_loop + 1):
            for prefix in itertools.product(states, repeat=plen):
                for loop in itertools.product(states, repeat=llen):
                    seqs.add(LassoSequence(prefix, loop).normalized())
    return sorted(seqs, key=_seq_key)


def _nonempty_subsets(k: int) -> list[frozenset[int]]:
    return [frozenset(c) for r in range(1, k + 1) for c in itertools.combinations(range(k), r)]


def estimate_count(vocab: Vocabulary, b: OracleBounds) -> int:
    n = len(enumerate_sequences(vocab.props, b))
    named = len(vocab.standpoints - {UNIVERSAL})
    return sum(math.comb(n, k) * (2 ** k - 1) ** named for k in range(1, b.max_sequences + 1))


def _lambdas(standpoints: list[str], k: int, orderings) -> Iterator[dict]:
    subsets = _nonempty_subsets(k)
    for choice in itertools.product(subsets, repeat=len(standpoints)):
        lam = dict(zip(standpoints, choice))
        lam[UNIVERSAL] = frozenset(range(k))
        if all(lam[e.sharper] <= lam[e.broader] for e in orderings):
            yield lam


def _combinations(vocab: Vocabulary, b: OracleBounds) -> Iterator[tuple]:
    seqs = enumerate_sequences(vocab.props, b)
    for k in range(1, b.max_sequences + 1):
        yield from itertools.combinations(seqs, k)


def enumerate_structures(vocab: Vocabulary, b: OracleBounds,
                         orderings: Iterable[StandpointExpression] = ()) -> Iterator[LassoStructure]:
    """All structures within the bounds up to reordering of sequences, smallest first.

    ``orderings`` restricts the standpoint interpretations to those respecting them.
    """
    estimate = estimate_count(vocab, b)
    if estimate > b.cap:
        raise BoundsTooLarge(f"about {estimate} structures exceed the cap of {b.cap}")
    named = sorted(vocab.standpoints - {UNIVERSAL})
    orderings = tuple(orderings)
    for combo in _combinations(vocab, b):
        for lam in _lambdas(named, len(combo), orderings):
            yield LassoStructure(combo, lam)


def _modal_free(f: Formula) -> bool:
    return not any(isinstance(g, (Diamond, Box)) for g in walk(f))


def brute_sat(spec: ProblemSpec, b: OracleBounds | None = None) -> Found | NotFoundWithinBounds:
    """First enumerated structure in which some sequence satisfies the problem at time 0."""
    b = b or OracleBounds()
    estimate = estimate_count(spec.vocab, b)
    if estimate > b.cap:
        raise BoundsTooLarge(f"about {estimate} structures exceed the cap of {b.cap}")
    named = sorted(spec.vocab.standpoints - {UNIVERSAL})
    plain = {g for f in spec.formulas for g in walk(f) if _modal_free(g)}
    examined = 0
    for combo in _combinations(spec.vocab, b):
        base = None
        for lam in _lambdas(named, len(combo), spec.orderings):
            examined += 1
            m = LassoStructure(combo, lam)
            if base is None:
                # Modal-free subformulas do not depend on the interpretation.
                pre = Evaluator(m)
                base = {g: pre.table(g) for g in plain}
            ev = Evaluator(m, base)
            for i in range(len(combo)):
                if satisfies_spec(m, i, spec, ev):
                    return Found(m, i)
    return NotFoundWithinBounds(b, examined)


# -- random problems ----------------------------------------------------------

@dataclass(frozen=True)
class RandomConfig:
    props: tuple[str, ...] = ("p", "q")
    standpoints: tuple[str, ...] = ("s", "t")
    max_depth: int = 5
    max_size: int = 10
    max_formulas: int = 2
    ordering_chance: float = 0.2
    weights: tuple[float, float, float, float] = (0.3, 0.3, 0.3, 0.1)


def random_formula(rng: random.Random, cfg: RandomConfig, depth: int = 0) -> Formula:
    """Grammar-directed NNF formula: literals, boolean, temporal, standpoint operators."""
    kind = "lit" if depth >= cfg.max_depth else rng.choices(
        ("lit", "bool", "temp", "modal"), weights=cfg.weights)[0]
    if kind == "lit":
        p = rng.choice(cfg.props)
        return Prop(p) if rng.random() < 0.5 else NegProp(p)
    sub = lambda: random_formula(rng, cfg, depth + 1)
    if kind == "bool":
        return rng.choice((And, Or))(sub(), sub())
    if kind == "temp":
        op = rng.choice((Next, Eventually, Always, Until, Release))
        return op(sub(), sub()) if op in (Until, Release) else op(sub())
    s = rng.choice(cfg.standpoints + (UNIVERSAL,))
    return rng.choice((Diamond, Box))(s, sub())


def random_spec(rng: random.Random, cfg: RandomConfig | None = None) -> ProblemSpec:
    """Random problem whose formulas have total size at most ``cfg.max_size``."""
    cfg = cfg or RandomConfig()
    while True:
        n = rng.randint(1, cfg.max_formulas)
        formulas = [random_formula(rng, cfg) for _ in range(n)]
        if size_set(formulas) <= cfg.max_size:
            break
    orderings = []
    if len(cfg.standpoints) >= 2 and rng.random() < cfg.ordering_chance:
        a, b = rng.sample(cfg.standpoints, 2)
        orderings.append(StandpointExpression(a, b))
    return ProblemSpec.build(formulas, orderings)


def random_corpus(n: int, seed: int, cfg: RandomConfig | None = None) -> list[ProblemSpec]:
    rng = random.Random(seed)
    return [random_spec(rng, cfg) for _ in range(n)]


def diamond_star(spec: ProblemSpec) -> ProblemSpec:
    """The problem asserting that some precisification satisfies all of ``spec``."""
    conj = spec.formulas[0]
    for f in spec.formulas[1:]:
        conj = And(conj, f)
    return ProblemSpec(spec.vocab, spec.orderings, (Diamond(UNIVERSAL, conj),))


# -- differential harness -----------------------------------------------------

@dataclass
class DiffEntry:
    spec: str
    tableau: str
    oracle: str
    problems: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"spec": self.spec, "tableau": self.tableau, "oracle": self.oracle,
                "problems": self.problems}


@dataclass
class DiffReport:
    entries: list[DiffEntry] = field(default_factory=list)

    @property
    def disagreements(self) -> list[DiffEntry]:
        return [e for e in self.entries if e.problems]

    @property
    def ok(self) -> bool:
        return not self.disagreements

    def to_json(self) -> dict:
        return {"checked": len(self.entries), "disagreements": len(self.disagreements),
                "entries": [e.to_json() for e in self.entries]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def check_one(spec: ProblemSpec, b: OracleBounds, limits: SearchLimits | None = None) -> DiffEntry:
    problems = []
    try:
        verdict = solve(spec, limits)
        status = verdict.status
        if verdict.sat and verdict.model is None:
            problems.append(f"satisfiable but no finite model was extracted: {verdict.reason}")
        elif verdict.sat and not satisfies_spec(verdict.model, 0, spec):
            problems.append("extracted model does not satisfy the problem")
    except ExtractionError as exc:
        status = "ERROR"
        problems.append(f"model extraction failed: {exc}")
    oracle = brute_sat(spec, b)
    if oracle.found and status == "UNSAT":
        problems.append(f"oracle found a model the tableau missed: {oracle.structure.dumps()}")
    if status == "LIMIT":
        problems.append("tableau hit its search limit")
    return DiffEntry(str(spec), status, "FOUND" if oracle.found else "NOT_FOUND", problems)


def differential_check(corpus: Iterable[ProblemSpec], b: OracleBounds | None = None,
                       limits: SearchLimits | None = None) -> DiffReport:
    b = b or OracleBounds()
    return DiffReport([check_one(spec, b, limits) for spec in corpus])
