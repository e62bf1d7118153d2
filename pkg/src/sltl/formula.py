"""Formula representation for standpoint LTL.

Formulas are immutable trees kept in negation normal form: negation only ever
sits on a proposition (``NegProp``).  The surface connectives ``Not`` and
``Implies`` exist only until :func:`to_nnf` removes them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Union

UNIVERSAL = "*"

_NAME_RE = re.compile(r"[A-Za-z0-9_]+")


def valid_name(name: str) -> bool:
    return bool(_NAME_RE.fullmatch(name))


class Formula:
    """Base class for NNF formulas."""

    __slots__ = ()

    def children(self) -> tuple[Formula, ...]:
        return ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class NegProp(Formula):
    name: str


@dataclass(frozen=True)
class Bottom(Formula):
    """Falsum; shorthand for an arbitrary ``{p, !p}`` clash."""


@dataclass(frozen=True)
class _Binary(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class And(_Binary):
    pass


@dataclass(frozen=True)
class Or(_Binary):
    pass


@dataclass(frozen=True)
class Until(_Binary):
    pass


@dataclass(frozen=True)
class Release(_Binary):
    pass


@dataclass(frozen=True)
class _Unary(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Next(_Unary):
    pass


@dataclass(frozen=True)
class Eventually(_Unary):
    pass


@dataclass(frozen=True)
class Always(_Unary):
    pass


@dataclass(frozen=True)
class Diamond(Formula):
    standpoint: str
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Box(Formula):
    standpoint: str
    arg: Formula

    def children(self):
        return (self.arg,)


# Surface-only connectives.

@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Implies(_Binary):
    pass


BOTTOM = Bottom()

Literal = Union[Prop, NegProp]


@dataclass(frozen=True)
class StandpointExpression:
    """``sharper <= broader``: every precisification of ``sharper`` is one of ``broader``."""

    sharper: str
    broader: str

    def __str__(self) -> str:
        return f"{self.sharper} <= {self.broader}"


@dataclass(frozen=True)
class Vocabulary:
    props: frozenset[str]
    standpoints: frozenset[str] = frozenset({UNIVERSAL})

    def __post_init__(self):
        if not self.props:
            raise ValueError("vocabulary needs at least one proposition")
        if UNIVERSAL not in self.standpoints:
            object.__setattr__(self, "standpoints", self.standpoints | {UNIVERSAL})
        for p in self.props:
            if not valid_name(p):
                raise ValueError(f"invalid proposition name {p!r}")
        for s in self.standpoints:
            if s != UNIVERSAL and not valid_name(s):
                raise ValueError(f"invalid standpoint name {s!r}")


@dataclass(frozen=True)
class ProblemSpec:
    vocab: Vocabulary
    orderings: frozenset[StandpointExpression] = field(default_factory=frozenset)
    formulas: tuple[Formula, ...] = ()

    def __post_init__(self):
        if not self.formulas:
            raise ValueError("a problem needs at least one formula")
        # Deduplicate while keeping the input order stable.
        object.__setattr__(self, "formulas", tuple(dict.fromkeys(self.formulas)))
        for f in self.formulas:
            missing_p = props_of(f) - self.vocab.props
            missing_s = standpoints_of(f) - self.vocab.standpoints
            if missing_p or missing_s:
                raise ValueError(f"formula {render(f)} uses undeclared names {sorted(missing_p | missing_s)}")
        for e in self.orderings:
            for s in (e.sharper, e.broader):
                if s not in self.vocab.standpoints:
                    raise ValueError(f"ordering {e} uses undeclared standpoint {s!r}")

    @classmethod
    def build(cls, formulas: Iterable[Formula], orderings: Iterable[StandpointExpression] = (),
              props: Iterable[str] = (), standpoints: Iterable[str] = ()) -> ProblemSpec:
        """Make a spec whose vocabulary is inferred from the formulas plus any extra names."""
        formulas = tuple(formulas)
        orderings = frozenset(orderings)
        ps = set(props)
        ss = set(standpoints) | {UNIVERSAL}
        for f in formulas:
            ps |= props_of(f)
            ss |= standpoints_of(f)
        for e in orderings:
            ss |= {e.sharper, e.broader}
        if not ps:
            ps = {"p"}
        return cls(Vocabulary(frozenset(ps), frozenset(ss)), orderings, formulas)

    def __str__(self) -> str:
        parts = [str(e) for e in sorted(self.orderings, key=str)]
        parts += [render(f) for f in self.formulas]
        return "; ".join(parts)


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    for c in f.children():
        yield from walk(c)


def props_of(f: Formula) -> set[str]:
    return {g.name for g in walk(f) if isinstance(g, (Prop, NegProp))}


def standpoints_of(f: Formula) -> set[str]:
    return {g.standpoint for g in walk(f) if isinstance(g, (Diamond, Box))}


def is_nnf(f: Formula) -> bool:
    return not any(isinstance(g, (Not, Implies)) for g in walk(f))


def is_literal(f: Formula) -> bool:
    return isinstance(f, (Prop, NegProp))


def is_elementary(f: Formula) -> bool:
    """Literals and next-formulas: what survives saturation of a time point."""
    return isinstance(f, (Prop, NegProp, Next))


def negate_literal(f: Literal) -> Literal:
    return NegProp(f.name) if isinstance(f, Prop) else Prop(f.name)


# -- negation normal form ---------------------------------------------------

def to_nnf(f: Formula) -> Formula:
    """Push negations down to propositions and expand implications."""
    if isinstance(f, Not):
        return _negate(f.arg)
    if isinstance(f, Implies):
        return Or(_negate(f.left), to_nnf(f.right))
    if isinstance(f, (Prop, NegProp, Bottom)):
        return f
    if isinstance(f, _Binary):
        return type(f)(to_nnf(f.left), to_nnf(f.right))
    if isinstance(f, (Diamond, Box)):
        return type(f)(f.standpoint, to_nnf(f.arg))
    return type(f)(to_nnf(f.arg))


def _negate(f: Formula) -> Formula:
    """NNF of ``Not(f)``."""
    if isinstance(f, Prop):
        return NegProp(f.name)
    if isinstance(f, NegProp):
        return Prop(f.name)
    if isinstance(f, Not):
        return to_nnf(f.arg)
    if isinstance(f, Implies):
        return And(to_nnf(f.left), _negate(f.right))
    if isinstance(f, And):
        return Or(_negate(f.left), _negate(f.right))
    if isinstance(f, Or):
        return And(_negate(f.left), _negate(f.right))
    if isinstance(f, Until):
        return Release(_negate(f.left), _negate(f.right))
    if isinstance(f, Release):
        return Until(_negate(f.left), _negate(f.right))
    if isinstance(f, Next):
        return Next(_negate(f.arg))
    if isinstance(f, Eventually):
        return Always(_negate(f.arg))
    if isinstance(f, Always):
        return Eventually(_negate(f.arg))
    if isinstance(f, Diamond):
        return Box(f.standpoint, _negate(f.arg))
    if isinstance(f, Box):
        return Diamond(f.standpoint, _negate(f.arg))
    raise TypeError(f"cannot negate {f!r}")


def negation(f: Formula) -> Formula:
    return _negate(f)


# -- subformulae, size, closure ---------------------------------------------

def subformulae(f: Formula) -> frozenset[Formula]:
    return frozenset(walk(f))


def size(f: Formula) -> int:
    return len(subformulae(f))


def size_set(formulas: Iterable[Formula]) -> int:
    return sum(size(f) for f in formulas)


def closure(spec_or_formulas) -> frozenset[Formula]:
    """Least set containing all subformulae, both polarities of every proposition,
    ``X(a U b)``/``X(a R b)`` for every until/release and ``X F a``/``X G a`` for
    every eventually/always."""
    formulas = spec_or_formulas.formulas if isinstance(spec_or_formulas, ProblemSpec) else spec_or_formulas
    cl: set[Formula] = set()
    for f in formulas:
        cl |= subformulae(f)
    extra: set[Formula] = set()
    for g in cl:
        if isinstance(g, (Prop, NegProp)):
            extra.add(Prop(g.name))
            extra.add(NegProp(g.name))
        elif isinstance(g, (Until, Release, Eventually, Always)):
            extra.add(Next(g))
    return frozenset(cl | extra)


# -- rendering ----------------------------------------------------------------

# Binding strength, loosest first.
_PREC = {Implies: 1, Or: 2, And: 3, Until: 4, Release: 4}
_UNARY_PREC = 5
_BIN_OP = {Implies: "->", Or: "|", And: "&", Until: "U", Release: "R"}
_UN_OP = {Next: "X", Eventually: "F", Always: "G", Not: "!"}


def _prec(f: Formula) -> int:
    return _PREC.get(type(f), _UNARY_PREC)


def render(f: Formula, full_parens: bool = False) -> str:
    """Concrete syntax accepted by :func:`sltl.parser.parse_formula`."""
    if full_parens:
        return _render_full(f)
    return _render(f)


@lru_cache(maxsize=65536)
def _render(f: Formula) -> str:
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, NegProp):
        return "!" + f.name
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, _Binary):
        p = _prec(f)
        left, right = _render(f.left), _render(f.right)
        # &, | associate to the left; U, R, -> to the right.
        if isinstance(f, (Until, Release, Implies)):
            if _prec(f.left) <= p:
                left = f"({left})"
            if _prec(f.right) < p:
                right = f"({right})"
        else:
            if _prec(f.left) < p:
                left = f"({left})"
            if _prec(f.right) <= p:
                right = f"({right})"
        return f"{left} {_BIN_OP[type(f)]} {right}"
    arg = _render(f.arg)
    if _prec(f.arg) < _UNARY_PREC:
        arg = f"({arg})"
    if isinstance(f, Diamond):
        return f"<{f.standpoint}> {arg}"
    if isinstance(f, Box):
        return f"[{f.standpoint}] {arg}"
    op = _UN_OP[type(f)]
    sep = "" if op == "!" else " "
    return f"{op}{sep}{arg}"


def _render_full(f: Formula) -> str:
    if isinstance(f, (Prop, NegProp, Bottom)):
        return _render(f)
    if isinstance(f, _Binary):
        return f"({_render_full(f.left)} {_BIN_OP[type(f)]} {_render_full(f.right)})"
    arg = _render_full(f.arg)
    if isinstance(f, Diamond):
        return f"(<{f.standpoint}> {arg})"
    if isinstance(f, Box):
        return f"([{f.standpoint}] {arg})"
    op = _UN_OP[type(f)]
    sep = "" if op == "!" else " "
    return f"({op}{sep}{arg})"


def sort_key(f: Formula) -> tuple[int, str]:
    return (len(_render(f)), _render(f))
