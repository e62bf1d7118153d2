"""Ultimately periodic temporal standpoint structures and their evaluator.

A structure holds finitely many lasso sequences and a standpoint
interpretation mapping each standpoint name to a non-empty set of sequence
indices.  Every sequence is laid out on a shared frame of ``P + L`` positions,
where ``P`` is the longest prefix and ``L`` the least common multiple of the
loop lengths; position ``P + L - 1`` wraps back to ``P``.  Temporal operators
are then computed as least/greatest fixpoints over that frame.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .formula import (
    UNIVERSAL, Always, And, Bottom, Box, Diamond, Eventually, Formula, NegProp, Next, Or,
    ProblemSpec, Prop, Release, StandpointExpression, Until, render,
)

State = frozenset  # of proposition names


class UnknownName(KeyError):
    pass


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class LassoSequence:
    prefix: tuple[State, ...]
    loop: tuple[State, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(frozenset(s) for s in self.prefix))
        object.__setattr__(self, "loop", tuple(frozenset(s) for s in self.loop))
        if not self.loop:
            raise StructureError("a lasso needs a non-empty loop")

    def state(self, n: int) -> State:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.loop[(n - len(self.prefix)) % len(self.loop)]

    def normalized(self) -> LassoSequence:
        """Shortest equivalent lasso: primitive loop, prefix rolled into it."""
        loop = list(self.loop)
        n = len(loop)
        for d in range(1, n + 1):
            if n % d == 0 and loop == loop[:d] * (n // d):
                loop = loop[:d]
                break
        prefix = list(self.prefix)
        while prefix and prefix[-1] == loop[-1]:
            prefix.pop()
            loop = [loop[-1]] + loop[:-1]
        return LassoSequence(tuple(prefix), tuple(loop))

    def to_json(self) -> dict:
        return {"prefix": [sorted(s) for s in self.prefix], "loop": [sorted(s) for s in self.loop]}

    @classmethod
    def from_json(cls, data: Mapping) -> LassoSequence:
        return cls(tuple(frozenset(s) for s in data.get("prefix", [])),
                   tuple(frozenset(s) for s in data["loop"]))


@dataclass(frozen=True)
class LassoStructure:
    sequences: tuple[LassoSequence, ...]
    lam: Mapping[str, frozenset[int]]

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        lam = {s: frozenset(ix) for s, ix in self.lam.items()}
        everything = frozenset(range(len(self.sequences)))
        if not self.sequences:
            raise StructureError("a structure needs at least one sequence")
        if lam.setdefault(UNIVERSAL, everything) != everything:
            raise StructureError("the universal standpoint must cover every sequence")
        for s, ix in lam.items():
            if not ix:
                raise StructureError(f"standpoint {s!r} is interpreted as the empty set")
            if not ix <= everything:
                raise StructureError(f"standpoint {s!r} refers to a missing sequence")
        object.__setattr__(self, "lam", lam)

    def __hash__(self):
        return hash((self.sequences, tuple(sorted(self.lam.items()))))

    def to_json(self) -> dict:
        return {"sequences": [s.to_json() for s in self.sequences],
                "lambda": {s: sorted(ix) for s, ix in sorted(self.lam.items())}}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: Mapping) -> LassoStructure:
        try:
            seqs = tuple(LassoSequence.from_json(s) for s in data["sequences"])
            lam = {s: frozenset(ix) for s, ix in data.get("lambda", {}).items()}
        except (KeyError, TypeError) as exc:
            raise StructureError(f"malformed structure JSON: {exc}") from exc
        return cls(seqs, lam)

    @classmethod
    def loads(cls, text: str) -> LassoStructure:
        return cls.from_json(json.loads(text))


class Evaluator:
    """Truth tables of formulas over one structure, memoised per formula."""

    def __init__(self, structure: LassoStructure, base: Mapping | None = None):
        self.m = structure
        seqs = structure.sequences
        self.plen = max(len(s.prefix) for s in seqs)
        self.llen = math.lcm(*(len(s.loop) for s in seqs))
        self.width = self.plen + self.llen
        self.succ = list(range(1, self.width)) + [self.plen]
        self.states = [[s.state(n) for n in range(self.width)] for s in seqs]
        self.cache: dict[Formula, list[list[bool]]] = dict(base or {})

    def position(self, n: int) -> int:
        if n < self.plen:
            return n
        return self.plen + (n - self.plen) % self.llen

    def holds(self, i: int, n: int, f: Formula) -> bool:
        if not 0 <= i < len(self.m.sequences):
            raise IndexError(f"no sequence {i}")
        if n < 0:
            raise ValueError("time must be non-negative")
        return self.table(f)[i][self.position(n)]

    def table(self, f: Formula) -> list[list[bool]]:
        t = self.cache.get(f)
        if t is None:
            t = self._compute(f)
            self.cache[f] = t
        return t

    def _fix(self, step, init: bool) -> list[list[bool]]:
        out = []
        for k in range(len(self.m.sequences)):
            val = [init] * self.width
            changed = True
            while changed:
                changed = False
                for pos in reversed(range(self.width)):
                    new = step(k, pos, val[self.succ[pos]])
                    if new != val[pos]:
                        val[pos] = new
                        changed = True
            out.append(val)
        return out

    def _compute(self, f: Formula) -> list[list[bool]]:
        rows = range(len(self.m.sequences))
        cols = range(self.width)
        if isinstance(f, Prop):
            return [[f.name in self.states[k][n] for n in cols] for k in rows]
        if isinstance(f, NegProp):
            return [[f.name not in self.states[k][n] for n in cols] for k in rows]
        if isinstance(f, Bottom):
            return [[False] * self.width for _ in rows]
        if isinstance(f, (And, Or)):
            a, b = self.table(f.left), self.table(f.right)
            op = (lambda x, y: x and y) if isinstance(f, And) else (lambda x, y: x or y)
            return [[op(a[k][n], b[k][n]) for n in cols] for k in rows]
        if isinstance(f, Next):
            a = self.table(f.arg)
            return [[a[k][self.succ[n]] for n in cols] for k in rows]
        if isinstance(f, Eventually):
            a = self.table(f.arg)
            return self._fix(lambda k, n, nxt: a[k][n] or nxt, False)
        if isinstance(f, Always):
            a = self.table(f.arg)
            return self._fix(lambda k, n, nxt: a[k][n] and nxt, True)
        if isinstance(f, Until):
            a, b = self.table(f.left), self.table(f.right)
            return self._fix(lambda k, n, nxt: b[k][n] or (a[k][n] and nxt), False)
        if isinstance(f, Release):
            a, b = self.table(f.left), self.table(f.right)
            return self._fix(lambda k, n, nxt: b[k][n] and (a[k][n] or nxt), True)
        if isinstance(f, (Diamond, Box)):
            members = self.m.lam.get(f.standpoint)
            if members is None:
                raise UnknownName(f"standpoint {f.standpoint!r} is not interpreted")
            a = self.table(f.arg)
            quant = any if isinstance(f, Diamond) else all
            row = [quant(a[k][n] for k in members) for n in cols]
            return [list(row) for _ in rows]
        raise TypeError(f"cannot evaluate {render(f)} (not in negation normal form?)")


def holds(m: LassoStructure, i: int, n: int, f: Formula) -> bool:
    return Evaluator(m).holds(i, n, f)


def holds_ordering(m: LassoStructure, e: StandpointExpression) -> bool:
    try:
        return m.lam[e.sharper] <= m.lam[e.broader]
    except KeyError as exc:
        raise UnknownName(f"standpoint {exc.args[0]!r} is not interpreted") from None


def satisfies_spec(m: LassoStructure, i: int, spec: ProblemSpec, evaluator: Evaluator | None = None) -> bool:
    if not all(holds_ordering(m, e) for e in spec.orderings):
        return False
    ev = evaluator or Evaluator(m)
    return all(ev.holds(i, 0, f) for f in spec.formulas)


def make_structure(sequences: Sequence[tuple[Iterable[Iterable[str]], Iterable[Iterable[str]]]],
                   lam: Mapping[str, Iterable[int]] | None = None) -> LassoStructure:
    """Convenience constructor: ``make_structure([([{'p'}], [set()])], {'s': [0]})``."""
    seqs = tuple(LassoSequence(tuple(frozenset(s) for s in pre), tuple(frozenset(s) for s in lp))
                 for pre, lp in sequences)
    return LassoStructure(seqs, {k: frozenset(v) for k, v in (lam or {}).items()})
