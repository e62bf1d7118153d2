"""Satisfiability checking for standpoint linear temporal logic."""
from __future__ import annotations

from .formula import ProblemSpec, StandpointExpression, Vocabulary, render, to_nnf
from .parser import ParseError, parse, parse_formula
from .semantics import LassoSequence, LassoStructure, holds, satisfies_spec
from .tableau import SearchLimits, Verdict, solve

__all__ = [
    "LassoSequence", "LassoStructure", "ParseError", "ProblemSpec", "SearchLimits",
    "StandpointExpression", "Verdict", "Vocabulary", "holds", "parse", "parse_formula",
    "render", "satisfies_spec", "solve", "to_nnf",
]
