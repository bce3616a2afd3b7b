"""Exact symbolic expressions over jet variables."""

from .atoms import (
    DEFAULT_CONSTANTS,
    Atom,
    Const,
    Exp,
    Func,
    Jet,
    JetOrderError,
    PowBase,
    SymbolicError,
    Var,
    jet_order_limit,
    max_jet_order,
    set_max_jet_order,
)
from .expr import (
    ONE,
    ZERO,
    EvaluationError,
    Expr,
    const,
    diff,
    eval_numeric,
    exp,
    func,
    jet,
    lambdify,
    map_atoms,
    substitute,
    substitute_functions,
    var,
)
from .parser import ParseError, UnknownIdentifier, parse, parse_atom
from .printer import to_text


def normalize(e: Expr) -> Expr:
    """Return the canonical form of ``e``.

    Expressions are normalized on construction, so this is the identity on
    values; it exists so callers can state the intent explicitly.
    """
    return Expr(dict(e.terms()))


diff_partial = diff

__all__ = [
    "DEFAULT_CONSTANTS",
    "Atom",
    "Const",
    "EvaluationError",
    "Exp",
    "Expr",
    "Func",
    "Jet",
    "JetOrderError",
    "ONE",
    "ParseError",
    "PowBase",
    "SymbolicError",
    "UnknownIdentifier",
    "Var",
    "ZERO",
    "const",
    "diff",
    "diff_partial",
    "eval_numeric",
    "exp",
    "func",
    "jet",
    "jet_order_limit",
    "lambdify",
    "map_atoms",
    "max_jet_order",
    "normalize",
    "parse",
    "parse_atom",
    "set_max_jet_order",
    "substitute",
    "substitute_functions",
    "to_text",
    "var",
]
