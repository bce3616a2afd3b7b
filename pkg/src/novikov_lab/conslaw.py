"""Conserved vectors from symmetries via the formal Lagrangian, their reduction,
triviality test and exact divergence identity."""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product

from .adjoint import adjoint_equation, formal_lagrangian, ordered_partial, v_to
from .jetcalc import (
    Equation,
    divide_by_equation,
    integrate_by_parts_x,
    restrict_to_solutions,
    total_derivative,
)
from .symcore import ZERO, Expr, Jet, SymbolicError
from .symmetry import VectorField, characteristic

DIRS = ("t", "x")


class DivergenceError(SymbolicError):
    def __init__(self, remainder: Expr):
        super().__init__(f"divergence is not a multiple of the equation; remainder {remainder}")
        self.remainder = remainder


@dataclass(frozen=True)
class ConservedVector:
    c_t: Expr
    c_x: Expr
    multiplier: Expr | None = None
    generator: str = ""
    stage: str = "raw"

    def divergence(self) -> Expr:
        return total_derivative(self.c_t, "t") + total_derivative(self.c_x, "x")

    def has_nonlocal(self) -> bool:
        return any(j.base == "v" for j in self.c_t.jets() | self.c_x.jets())


def _D(e: Expr, *dirs: str) -> Expr:
    for d in dirs:
        if e.is_zero():
            return e
        e = total_derivative(e, d)
    return e


def conserved_vector_raw(X: VectorField, eq: Equation) -> ConservedVector:
    """Components W[L_i - D_j L_ij + D_jD_k L_ijk] + D_j W [L_ij - D_k L_ijk] + D_jD_k W L_ijk,
    with L = v F and symmetric partials over ordered indices; v stays symbolic."""
    L = formal_lagrangian(eq).symmetric_form
    order = max((j.order for j in L.jets() if j.base == "u"), default=0)
    if order > 3:
        raise SymbolicError("the construction is implemented for equations up to third order")
    W = characteristic(X)
    P = lambda *idx: ordered_partial(L, idx)  # noqa: E731
    comps = []
    for i in DIRS:
        first = P(i)
        for j in DIRS:
            first = first - _D(P(i, j), j)
        for j, k in product(DIRS, DIRS):
            first = first + _D(P(i, j, k), j, k)
        c = W * first
        for j in DIRS:
            second = P(i, j)
            for k in DIRS:
                second = second - _D(P(i, j, k), k)
            if not second.is_zero():
                c = c + _D(W, j) * second
        for j, k in product(DIRS, DIRS):
            third = P(i, j, k)
            if not third.is_zero():
                c = c + _D(W, j, k) * third
        comps.append(c)
    return ConservedVector(comps[0], comps[1], generator=X.name, stage="raw")


def eliminate_nonlocal(cv: ConservedVector, phi: Expr | None = None) -> ConservedVector:
    """Set v = phi (default v = u, valid for strictly self-adjoint equations)."""
    phi = Expr.atom(Jet("u")) if phi is None else phi
    return replace(cv, c_t=v_to(phi, cv.c_t), c_x=v_to(phi, cv.c_x))


def restrict_vector(cv: ConservedVector, eq: Equation) -> ConservedVector:
    return replace(cv, c_t=restrict_to_solutions(cv.c_t, eq), c_x=restrict_to_solutions(cv.c_x, eq), stage="restricted")


def reduce_vector(cv: ConservedVector, eq: Equation) -> ConservedVector:
    """Restrict to solutions, write C0 = A + D_x B and move B into the flux:
    (A, C1 + D_t B), the flux simplified on the solution manifold."""
    if cv.has_nonlocal():
        raise SymbolicError("eliminate the nonlocal variable before reducing")
    r = restrict_vector(cv, eq)
    density, potential = integrate_by_parts_x(r.c_t, eq)
    flux = restrict_to_solutions(r.c_x + total_derivative(potential, "t"), eq)
    return ConservedVector(density, flux, cv.multiplier, cv.generator, "reduced")


def _is_function_of_t(e: Expr) -> bool:
    return not e.jets() and not e.depends_on_var("x") and not e.funcs() - {
        f for f in e.funcs() if f.args == ("t",)
    }


def is_trivial(cv: ConservedVector, eq: Equation) -> bool:
    """Null after restriction and transfer of total derivatives between components.

    Once the density reduces to zero, the flux must be annihilated by D_x on
    solutions, i.e. a function of t alone, which is D_t of its antiderivative
    and transfers back into a vanishing density.
    """
    red = reduce_vector(cv, eq)
    if not red.c_t.is_zero():
        return False
    return red.c_x.is_zero() or _is_function_of_t(red.c_x)


def verify_divergence(cv: ConservedVector, eq: Equation) -> Expr:
    """Exact multiplier Lambda with D_t C0 + D_x C1 = Lambda * F (off-shell)."""
    q, r = divide_by_equation(cv.divergence(), eq)
    if not r.is_zero():
        raise DivergenceError(r)
    return q


def adjoint_system(eq: Equation) -> list[Equation]:
    """The equation together with its adjoint, solved for u_txx and v_txx."""
    lead = eq.leading
    adj = Equation.from_lhs(adjoint_equation(eq), leading=Jet("v", lead.t_order, lead.x_order), name="adjoint")
    return [eq, adj]


def conserved_on_joint_manifold(cv: ConservedVector, eq: Equation) -> Expr:
    """Divergence of a raw vector (v symbolic) restricted by F = 0 and F* = 0."""
    return restrict_to_solutions(cv.divergence(), adjoint_system(eq))


__all__ = [
    "ConservedVector",
    "DivergenceError",
    "adjoint_system",
    "conserved_on_joint_manifold",
    "conserved_vector_raw",
    "eliminate_nonlocal",
    "is_trivial",
    "reduce_vector",
    "restrict_vector",
    "verify_divergence",
]
