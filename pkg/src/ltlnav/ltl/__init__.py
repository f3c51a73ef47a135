"""LTL parsing, semantics and Büchi automaton translation."""

from .automaton import NBA, Transition, accepting_run, accepts_lasso, dump, guard_matches, load, translate
from .formula import (
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Eventually,
    FalseF,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    Release,
    TrueF,
    Until,
    atoms,
    to_nnf,
)
from .parser import LTLSyntaxError, UnknownProposition, parse
from .semantics import LassoWord, eval_lasso

__all__ = [
    "NBA", "Transition", "accepting_run", "accepts_lasso", "dump", "guard_matches", "load", "translate",
    "FALSE", "TRUE", "Always", "And", "Atom", "Eventually", "FalseF", "Formula", "Implies", "Next",
    "Not", "Or", "Release", "TrueF", "Until", "atoms", "to_nnf",
    "LTLSyntaxError", "UnknownProposition", "parse", "LassoWord", "eval_lasso",
]
