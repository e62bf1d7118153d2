"""Text front end.

Problem files hold statements separated by ``;`` or newlines.  A statement is
a formula, a sharpening ``a <= b``, or a declaration ``prop p, q`` /
``standpoint s, t``.  ``#`` starts a comment running to the end of the line.

Operator precedence, loosest first: ``->``, ``|``, ``&``, ``U``/``R`` (right
associative), then the prefix operators ``!``, ``X``, ``F``, ``G``, ``<s>``,
``[s]``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import (
    UNIVERSAL, And, Always, Box, Diamond, Eventually, Formula, Implies, Next, Not, Or,
    ProblemSpec, Prop, Release, StandpointExpression, Until, Vocabulary, props_of,
    standpoints_of, to_nnf,
)

KEYWORDS = {"X", "F", "G", "U", "R"}
_DECLS = {"prop", "standpoint"}


class ParseError(SyntaxError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class UndeclaredName(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # ident, op, sep, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<ident>[A-Za-z0-9_]+)
  | (?P<op>->|<=|[*<>\[\]()!&|,])
  | (?P<sep>;)
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind == "newline":
            tokens.append(Token("sep", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind in ("ident", "op", "sep"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _split_statements(tokens: list[Token]) -> list[list[Token]]:
    statements, current, depth = [], [], 0
    for tok in tokens:
        if tok.kind == "eof":
            break
        if tok.kind == "op" and tok.text == "(":
            depth += 1
        elif tok.kind == "op" and tok.text == ")":
            depth -= 1
        if tok.kind == "sep":
            if tok.text == ";" or depth <= 0:
                if current:
                    statements.append(current)
                current = []
            continue
        current.append(tok)
    if current:
        statements.append(current)
    return statements


class _FormulaParser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        last = tokens[-1] if tokens else Token("eof", "", 1, 1)
        self.end = Token("eof", "", last.line, last.col + len(last.text))

    def peek(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self.end

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, tok: Token, msg: str):
        raise ParseError(tok.line, tok.col, msg)

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            self.error(tok, f"expected {text!r}, found {tok.text or 'end of statement'!r}")
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("op", "ident") and tok.text == text

    def parse(self) -> Formula:
        f = self.implication()
        if self.peek().kind != "eof":
            tok = self.peek()
            self.error(tok, f"unexpected {tok.text!r}")
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.next()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at("|"):
            self.next()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.temporal()
        while self.at("&"):
            self.next()
            f = And(f, self.temporal())
        return f

    def temporal(self) -> Formula:
        left = self.unary()
        tok = self.peek()
        if tok.kind == "ident" and tok.text in ("U", "R"):
            self.next()
            right = self.temporal()
            return Until(left, right) if tok.text == "U" else Release(left, right)
        return left

    def standpoint_name(self) -> str:
        tok = self.next()
        if tok.text == UNIVERSAL or (tok.kind == "ident" and tok.text not in KEYWORDS):
            return tok.text
        self.error(tok, f"expected a standpoint name, found {tok.text or 'end of statement'!r}")

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "!":
            self.next()
            return Not(self.unary())
        if tok.kind == "ident" and tok.text in ("X", "F", "G"):
            self.next()
            cls = {"X": Next, "F": Eventually, "G": Always}[tok.text]
            return cls(self.unary())
        if tok.kind == "op" and tok.text == "<":
            self.next()
            s = self.standpoint_name()
            self.expect(">")
            return Diamond(s, self.unary())
        if tok.kind == "op" and tok.text == "[":
            self.next()
            s = self.standpoint_name()
            self.expect("]")
            return Box(s, self.unary())
        return self.atom()

    def atom(self) -> Formula:
        tok = self.next()
        if tok.kind == "op" and tok.text == "(":
            f = self.implication()
            self.expect(")")
            return f
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            return Prop(tok.text)
        self.error(tok, f"expected a formula, found {tok.text or 'end of statement'!r}")


def parse_extended(text: str) -> Formula:
    """Parse a single formula, keeping ``!`` and ``->`` as written."""
    tokens = [t for t in tokenize(text) if t.kind not in ("sep", "eof")]
    if not tokens:
        raise ParseError(1, 1, "empty formula")
    return _FormulaParser(tokens).parse()


def parse_formula(text: str) -> Formula:
    return to_nnf(parse_extended(text))


def _is_declaration(stmt: list[Token]) -> bool:
    return (len(stmt) >= 2 and stmt[0].kind == "ident" and stmt[0].text in _DECLS
            and stmt[1].kind == "ident")


def _is_ordering(stmt: list[Token]) -> bool:
    return len(stmt) >= 2 and stmt[1].text == "<="


def _parse_declaration(stmt: list[Token]) -> tuple[str, list[str]]:
    names = []
    expect_name = True
    for tok in stmt[1:]:
        if expect_name:
            if tok.kind != "ident" or tok.text in KEYWORDS:
                raise ParseError(tok.line, tok.col, f"expected a name, found {tok.text!r}")
            names.append(tok.text)
        elif tok.text != ",":
            raise ParseError(tok.line, tok.col, f"expected ',', found {tok.text!r}")
        expect_name = not expect_name
    if expect_name:
        last = stmt[-1]
        raise ParseError(last.line, last.col, "dangling ',' in declaration")
    return stmt[0].text, names


def _parse_ordering(stmt: list[Token]) -> StandpointExpression:
    if len(stmt) != 3:
        tok = stmt[min(3, len(stmt) - 1)]
        raise ParseError(tok.line, tok.col, "a sharpening has the form 'a <= b'")
    for tok in (stmt[0], stmt[2]):
        if not (tok.text == UNIVERSAL or (tok.kind == "ident" and tok.text not in KEYWORDS)):
            raise ParseError(tok.line, tok.col, f"expected a standpoint name, found {tok.text!r}")
    return StandpointExpression(stmt[0].text, stmt[2].text)


def parse(text: str, strict: bool = False) -> ProblemSpec:
    """Parse a problem file into a :class:`ProblemSpec` with NNF formulas.

    Declaring ``prop`` (or ``standpoint``) names makes every proposition (or
    standpoint) used later have to be declared; ``strict=True`` demands both.
    """
    declared = {"prop": set(), "standpoint": set()}
    seen_decl = {"prop": strict, "standpoint": strict}
    formulas: list[tuple[Formula, Token]] = []
    orderings: list[tuple[StandpointExpression, Token]] = []

    for stmt in _split_statements(tokenize(text)):
        if _is_declaration(stmt):
            kind, names = _parse_declaration(stmt)
            declared[kind].update(names)
            seen_decl[kind] = True
        elif _is_ordering(stmt):
            orderings.append((_parse_ordering(stmt), stmt[0]))
        else:
            formulas.append((to_nnf(_FormulaParser(stmt).parse()), stmt[0]))

    if not formulas:
        raise ParseError(1, 1, "problem contains no formulas")

    props = set(declared["prop"])
    standpoints = set(declared["standpoint"]) | {UNIVERSAL}
    for f, tok in formulas:
        for kind, used in (("prop", props_of(f)), ("standpoint", standpoints_of(f) - {UNIVERSAL})):
            missing = used - declared[kind]
            if seen_decl[kind] and missing:
                raise UndeclaredName(f"line {tok.line}: undeclared {kind} {', '.join(sorted(missing))}")
        props |= props_of(f)
        standpoints |= standpoints_of(f)
    for e, tok in orderings:
        used = {e.sharper, e.broader} - {UNIVERSAL}
        missing = used - declared["standpoint"]
        if seen_decl["standpoint"] and missing:
            raise UndeclaredName(f"line {tok.line}: undeclared standpoint {', '.join(sorted(missing))}")
        standpoints |= used

    vocab = Vocabulary(frozenset(props), frozenset(standpoints))
    return ProblemSpec(vocab, frozenset(e for e, _ in orderings), tuple(f for f, _ in formulas))
