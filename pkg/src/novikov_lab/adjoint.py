"""Formal Lagrangian, adjoint equation and self-adjointness tests."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .jetcalc import (
    Equation,
    divide_by_equation,
    euler_operator,
    restrict_to_solutions,
    total_derivative_n,
)
from .symcore import Expr, Jet, SymbolicError, diff, map_atoms

V = Expr.atom(Jet("v"))


@dataclass(frozen=True)
class FormalLagrangian:
    """v * F.

    ``symmetric_form`` is the same value: with commuting jets the rewriting
    u_txx = (u_txx + u_xtx + u_xxt)/3 is an identity.  The symmetrization
    only shows up in :func:`ordered_partial`, which spreads the derivative
    with respect to a canonical jet evenly over its index orderings.
    """

    expr: Expr
    symmetric_form: Expr


def formal_lagrangian(eq: Equation) -> FormalLagrangian:
    L = V * eq.lhs
    return FormalLagrangian(L, L)


def ordered_partial(L: Expr, index: tuple[str, ...], base: str = "u") -> Expr:
    """dL/du_{i1...ik} for an ordered index tuple, symmetric convention."""
    a = index.count("t")
    b = len(index) - a
    if a + b != len(index) or any(i not in ("t", "x") for i in index):
        raise SymbolicError(f"bad derivative index {index}")
    return diff(L, Jet(base, a, b)) / comb(a + b, a)


def adjoint_equation(eq: Equation) -> Expr:
    """F* = E_u(v F)."""
    return euler_operator(formal_lagrangian(eq).expr, "u")


def v_to(phi: Expr, e: Expr) -> Expr:
    """Substitute v = phi(t, x, u), expanding jets of v by total derivatives."""
    bad = [j for j in phi.jets() if j.order > 0 or j.base != "u"]
    if bad:
        raise SymbolicError(f"substitution {phi} must not involve derivatives ({bad[0]})")
    return map_atoms(
        e,
        lambda a: total_derivative_n(phi, a.t_order, a.x_order)
        if isinstance(a, Jet) and a.base == "v"
        else None,
    )


def v_to_u(e: Expr) -> Expr:
    """Identify v with u jet by jet."""
    return map_atoms(
        e, lambda a: Expr.atom(Jet("u", a.t_order, a.x_order)) if isinstance(a, Jet) and a.base == "v" else None
    )


@dataclass(frozen=True)
class StrictResult:
    holds: bool
    factor: Expr | None
    adjoint_at_u: Expr


def check_strict_self_adjointness(eq: Equation) -> StrictResult:
    """F*|_{v=u} = lambda * F for some lambda (reported)."""
    S = v_to_u(adjoint_equation(eq))
    q, r = divide_by_equation(S, eq)
    ok = r.is_zero()
    return StrictResult(ok, q if ok else None, S)


@dataclass(frozen=True)
class SubstitutionResult:
    holds: bool
    degenerate: bool
    residual: Expr


def check_substitution(eq: Equation, phi: Expr) -> SubstitutionResult:
    """Does F* vanish on solutions once v = phi(t, x, u)?"""
    residual = restrict_to_solutions(v_to(phi, adjoint_equation(eq)), eq)
    return SubstitutionResult(residual.is_zero(), phi.is_zero(), residual)
