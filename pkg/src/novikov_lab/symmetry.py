"""Point symmetries: prolongation, invariance test, determining system, Lie brackets."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .jetcalc import Equation, divide_by_equation, restrict_to_solutions, total_derivative
from .symcore import ZERO, Expr, Func, Jet, SymbolicError, Var, diff, substitute, substitute_functions

U = Jet("u")
GENERIC_NAMES = ("xi0", "xi1", "eta")


@dataclass(frozen=True)
class VectorField:
    """xi_t d/dt + xi_x d/dx + eta d/du with coefficients in (t, x, u)."""

    xi_t: Expr
    xi_x: Expr
    eta: Expr
    name: str = ""

    def __post_init__(self) -> None:
        for c in self.components:
            bad = [j for j in c.jets() if j.order > 0 or j.base != "u"]
            if bad:
                raise SymbolicError(f"point symmetry coefficient {c} depends on {bad[0]}")

    @property
    def components(self) -> tuple[Expr, Expr, Expr]:
        return (self.xi_t, self.xi_x, self.eta)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __call__(self, f: Expr) -> Expr:
        """Action on a function of (t, x, u)."""
        return self.xi_t * diff(f, Var("t")) + self.xi_x * diff(f, Var("x")) + self.eta * diff(f, U)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(*(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(*(a - b for a, b in zip(self.components, other.components)))

    def scaled(self, c) -> "VectorField":
        return VectorField(*(c * a for a in self.components), name=self.name)

    def __str__(self) -> str:
        return f"({self.xi_t}, {self.xi_x}, {self.eta})"


@dataclass(frozen=True)
class ProlongedField:
    base: VectorField
    coeffs: dict[Jet, Expr] = field(hash=False)

    def apply(self, F: Expr) -> Expr:
        X = self.base
        out = X.xi_t * diff(F, Var("t")) + X.xi_x * diff(F, Var("x"))
        for j in sorted(F.jets(), key=lambda a: a.sort_key):
            if j.base != "u":
                raise SymbolicError("prolongation acts on u-jets only")
            if j not in self.coeffs:
                raise SymbolicError(f"prolongation does not reach {j}")
            out = out + self.coeffs[j] * diff(F, j)
        return out


def characteristic(X: VectorField) -> Expr:
    """W = eta - xi_t u_t - xi_x u_x."""
    return X.eta - X.xi_t * Expr.atom(Jet("u", 1, 0)) - X.xi_x * Expr.atom(Jet("u", 0, 1))


def prolong(X: VectorField, order: int, jets: Sequence[Jet] | None = None) -> ProlongedField:
    """eta^J = D_J(W) + xi_t u_{J,t} + xi_x u_{J,x} for every u-jet J up to ``order``."""
    W = characteristic(X)
    wanted = (
        [Jet("u", a, n - a) for n in range(order + 1) for a in range(n + 1)]
        if jets is None
        else [j for j in jets if j.order <= order]
    )
    cache: dict[tuple[int, int], Expr] = {(0, 0): W}

    def DW(a: int, b: int) -> Expr:
        if (a, b) not in cache:
            if b > 0:
                cache[(a, b)] = total_derivative(DW(a, b - 1), "x")
            else:
                cache[(a, b)] = total_derivative(DW(a - 1, b), "t")
        return cache[(a, b)]

    coeffs = {}
    for j in wanted:
        coeffs[j] = (
            DW(j.t_order, j.x_order)
            + X.xi_t * Expr.atom(j.shifted("t"))
            + X.xi_x * Expr.atom(j.shifted("x"))
        )
    return ProlongedField(X, coeffs)


@dataclass(frozen=True)
class SymmetryReport:
    is_symmetry: bool
    on_shell_residual: Expr
    off_shell_multiplier: Expr | None


def apply_prolonged(X: VectorField, F: Expr) -> Expr:
    order = max((j.order for j in F.jets()), default=0)
    return prolong(X, order, sorted(F.jets(), key=lambda a: a.sort_key)).apply(F)


def check_symmetry(X: VectorField, eq: Equation) -> SymmetryReport:
    action = apply_prolonged(X, eq.lhs)
    on_shell = restrict_to_solutions(action, eq)
    q, r = divide_by_equation(action, eq)
    return SymmetryReport(on_shell.is_zero(), on_shell, q if r.is_zero() else None)


def generic_field() -> VectorField:
    args = ("t", "x", "u")
    xi0, xi1, eta = (Expr.atom(Func(n, args)) for n in GENERIC_NAMES)
    return VectorField(xi0, xi1, eta, name="generic")


@dataclass(frozen=True)
class DeterminingSystem:
    """Linear homogeneous constraints on xi0(t,x,u), xi1(t,x,u), eta(t,x,u)."""

    constraints: tuple[Expr, ...]

    def evaluate(self, X: VectorField) -> list[Expr]:
        defs = dict(zip(GENERIC_NAMES, X.components))
        return [substitute_functions(c, defs) for c in self.constraints]

    def is_satisfied_by(self, X: VectorField) -> bool:
        return all(r.is_zero() for r in self.evaluate(X))

    def __len__(self) -> int:
        return len(self.constraints)


def determining_system(eq: Equation) -> DeterminingSystem:
    on_shell = restrict_to_solutions(apply_prolonged(generic_field(), eq.lhs), eq)
    groups = on_shell.collect(lambda a: isinstance(a, Jet) and a.order > 0)
    seen: list[Expr] = []
    for coeff in groups.values():
        if not coeff.is_zero() and coeff not in seen and -coeff not in seen:
            seen.append(coeff)
    return DeterminingSystem(tuple(seen))


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    comps = [X(b) - Y(a) for a, b in zip(X.components, Y.components)]
    name = f"[{X.name},{Y.name}]" if X.name and Y.name else ""
    return VectorField(*comps, name=name)


def reflect_x(X: VectorField) -> VectorField:
    """Image under the discrete map x -> -x (u, t fixed)."""
    flip = {Var("x"): -Expr.atom(Var("x"))}
    from .symcore import Exp, map_atoms

    def refl(e: Expr) -> Expr:
        e = substitute(e, flip)
        return map_atoms(e, lambda a: Expr.atom(Exp("x"), -1) if a == Exp("x") else None)

    return VectorField(refl(X.xi_t), -refl(X.xi_x), refl(X.eta), name=f"reflect({X.name})")


# linear algebra over Q -----------------------------------------------------

def _flatten(X: VectorField) -> dict[tuple, Fraction]:
    out = {}
    for i, c in enumerate(X.components):
        for mono, coef in c.terms():
            out[(i, mono)] = coef
    return out


def solve_rational(columns: list[dict], target: dict) -> list[Fraction] | None:
    """Exact least-structure solve of sum_k c_k columns[k] = target, or None."""
    keys = sorted({k for col in columns for k in col} | set(target), key=repr)
    n = len(columns)
    rows = [[col.get(k, Fraction(0)) for col in columns] + [target.get(k, Fraction(0))] for k in keys]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    if any(all(x == 0 for x in row[:n]) and row[n] != 0 for row in rows):
        return None
    sol = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        sol[c] = rows[i][n]
    return sol


def rank_of(fields: Sequence[VectorField]) -> int:
    cols = [_flatten(X) for X in fields]
    count = 0
    basis: list[dict] = []
    for col in cols:
        if not col:
            continue
        if basis and solve_rational(basis, col) is not None:
            continue
        basis.append(col)
        count += 1
    return count


class ClosureError(SymbolicError):
    def __init__(self, pair: tuple[str, str], bracket: VectorField):
        super().__init__(f"bracket [{pair[0]}, {pair[1]}] = {bracket} lies outside the span")
        self.pair = pair
        self.bracket = bracket


@dataclass(frozen=True)
class StructureTable:
    names: tuple[str, ...]
    constants: tuple[tuple[tuple[Fraction, ...], ...], ...]

    def bracket(self, i: int, j: int) -> tuple[Fraction, ...]:
        return self.constants[i][j]

    def as_text(self, i: int, j: int) -> str:
        parts = []
        for k, c in enumerate(self.constants[i][j]):
            if c:
                parts.append(f"{c}*{self.names[k]}")
        return " + ".join(parts) if parts else "0"


def closure_check(basis: Sequence[VectorField]) -> StructureTable:
    names = tuple(X.name or f"X{i + 1}" for i, X in enumerate(basis))
    if rank_of(basis) != len(basis):
        raise SymbolicError("basis fields are linearly dependent")
    cols = [_flatten(X) for X in basis]
    table = []
    for i, X in enumerate(basis):
        row = []
        for j, Y in enumerate(basis):
            Z = lie_bracket(X, Y)
            sol = solve_rational(cols, _flatten(Z)) if not Z.is_zero() else [Fraction(0)] * len(basis)
            if sol is None:
                raise ClosureError((names[i], names[j]), Z)
            row.append(tuple(sol))
        table.append(tuple(row))
    return StructureTable(names, tuple(table))


__all__ = [
    "ClosureError",
    "DeterminingSystem",
    "ProlongedField",
    "StructureTable",
    "SymmetryReport",
    "VectorField",
    "ZERO",
    "characteristic",
    "check_symmetry",
    "closure_check",
    "determining_system",
    "generic_field",
    "lie_bracket",
    "prolong",
    "rank_of",
    "reflect_x",
    "solve_rational",
]
