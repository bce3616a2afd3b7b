"""Differential algebra on the jet space of u(t, x) (and the nonlocal v)."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .symcore import ONE, ZERO, Expr, Jet, JetOrderError, SymbolicError, Var, diff
from .symcore.atoms import Exp, Func, PowBase

INDEPENDENT = ("t", "x")


class RestrictionError(SymbolicError):
    """Elimination of the leading derivative did not terminate."""


def rank(j: Jet) -> tuple[int, int]:
    """Elimination ranking: t-order first, then x-order."""
    return (j.t_order, j.x_order)


@dataclass(frozen=True)
class Equation:
    """A scalar PDE ``lhs = 0`` solved for one leading derivative.

    ``lhs == lead_coeff * (leading - solved_rhs)`` holds identically.
    """

    lhs: Expr
    leading: Jet
    solved_rhs: Expr
    lead_coeff: Fraction = Fraction(1)
    name: str = ""

    @classmethod
    def from_lhs(cls, lhs: Expr, leading: Jet | None = None, name: str = "") -> "Equation":
        if leading is None:
            leading = _pick_leading(lhs)
        parts = lhs.coefficients_in(leading)
        if set(parts) - {Fraction(0), Fraction(1)} or Fraction(1) not in parts:
            raise SymbolicError(f"{leading} does not occur linearly in {lhs}")
        coeff = parts[Fraction(1)]
        if not coeff.is_constant():
            raise SymbolicError(f"coefficient of {leading} must be a rational constant, got {coeff}")
        c = coeff.constant_value()
        rest = parts.get(Fraction(0), ZERO)
        rhs = -rest / c
        for j in rhs.jets():
            if j.base == leading.base and (is_descendant(j, leading) or rank(j) >= rank(leading)):
                raise SymbolicError(f"{j} in the solved form does not rank below {leading}")
        return cls(lhs, leading, rhs, c, name)

    def consequence(self, j: Jet) -> Expr:
        """D_t^a D_x^b of the solved relation, for a descendant ``j`` of the leading jet."""
        return _consequence(self, j)

    def __str__(self) -> str:
        return f"{self.lhs} = 0"


def _pick_leading(lhs: Expr) -> Jet:
    candidates = []
    for j in lhs.jets():
        if j.base != "u":
            continue
        parts = lhs.coefficients_in(j)
        if set(parts) <= {Fraction(0), Fraction(1)} and parts.get(Fraction(1), ZERO).is_constant():
            candidates.append(j)
    if not candidates:
        raise SymbolicError(f"no jet of {lhs} occurs linearly with a constant coefficient")
    return max(candidates, key=rank)


def is_descendant(j: Jet, leading: Jet) -> bool:
    return j.base == leading.base and j.t_order >= leading.t_order and j.x_order >= leading.x_order


def total_derivative(e: Expr, var: str) -> Expr:
    """D_t or D_x: explicit dependence plus the chain rule through every jet."""
    if var not in INDEPENDENT:
        raise SymbolicError(f"total derivative is defined for t and x, not {var!r}")
    out = diff(e, Var(var))
    jets = e.jets() | {Jet(a) for f in e.funcs() for a in f.args if a in ("u", "v")}
    for j in sorted(jets, key=lambda a: a.sort_key):
        d = diff(e, j)
        if not d.is_zero():
            out = out + d * Expr.atom(j.shifted(var))
    return out


def total_derivative_n(e: Expr, t_times: int = 0, x_times: int = 0) -> Expr:
    for _ in range(x_times):
        e = total_derivative(e, "x")
    for _ in range(t_times):
        e = total_derivative(e, "t")
    return e


def euler_operator(L: Expr, dep: str = "u") -> Expr:
    """Variational derivative sum_J (-D)_J dL/du_J over canonical multi-indices."""
    out = ZERO
    for j in sorted((j for j in L.jets() if j.base == dep), key=lambda a: a.sort_key):
        part = total_derivative_n(diff(L, j), j.t_order, j.x_order)
        out = out + (part if j.order % 2 == 0 else -part)
    return out


@functools.lru_cache(maxsize=4096)
def _consequence(eq: Equation, j: Jet) -> Expr:
    if not is_descendant(j, eq.leading):
        raise SymbolicError(f"{j} is not a descendant of {eq.leading}")
    return total_derivative_n(
        eq.solved_rhs, j.t_order - eq.leading.t_order, j.x_order - eq.leading.x_order
    )


def _as_list(eq: "Equation | Sequence[Equation]") -> list[Equation]:
    return [eq] if isinstance(eq, Equation) else list(eq)


def restrict_to_solutions(e: Expr, eq: "Equation | Sequence[Equation]", max_rounds: int = 200) -> Expr:
    """Eliminate the leading derivative(s) and all their differential consequences."""
    eqs = _as_list(eq)
    for _ in range(max_rounds):
        mapping = {}
        for j in e.jets():
            for q in eqs:
                if is_descendant(j, q.leading):
                    mapping[j] = q.consequence(j)
                    break
        if not mapping:
            return e
        from .symcore import substitute

        e = substitute(e, mapping)
    raise RestrictionError(f"elimination did not terminate within {max_rounds} rounds")


# integration by parts ------------------------------------------------------

def _is_tfamily(j: Jet) -> bool:
    return j.t_order > 0


def _top_jet(mono) -> tuple[Jet | None, bool]:
    """Highest jet of a monomial and whether it belongs to the t-family."""
    jets = [a for a, _ in mono if isinstance(a, Jet)]
    tfam = [j for j in jets if _is_tfamily(j)]
    pool = tfam or jets
    if not pool:
        return None, False
    return max(pool, key=lambda j: (j.t_order, j.x_order, j.base)), bool(tfam)


def _x_antiderivative_jetfree(mono, coef: Fraction) -> Expr | None:
    """Antiderivative in x of a jet-free term whose x-dependence is x^n e^{bx}."""
    rate = Fraction(0)
    power = Fraction(0)
    rest = []
    for a, e in mono:
        if isinstance(a, Exp) and a.var == "x":
            rate = e
        elif isinstance(a, Var) and a.name == "x":
            power = e
        elif isinstance(a, Func) and "x" in a.args:
            return None
        elif isinstance(a, PowBase) and not a.is_surd and a.base.depends_on_var("x"):
            return None
        else:
            rest.append((a, e))
    other = Expr({tuple(rest): coef})
    x = Expr.atom(Var("x"))
    ex = Expr.atom(Exp("x"), rate) if rate else ONE
    if rate == 0:
        if power == -1:
            return None
        return other * x ** (power + 1) / (power + 1)
    if power.denominator != 1 or power < 0:
        return None
    # int x^n e^{bx} = e^{bx} sum_k (-1)^k n!/(n-k)! x^{n-k} / b^{k+1}
    n = int(power)
    acc = ZERO
    falling = Fraction(1)
    for k in range(n + 1):
        acc = acc + (-1) ** k * falling * x ** (n - k) / rate ** (k + 1)
        falling *= n - k
    return other * ex * acc


def _peel(mono, coef: Fraction) -> Expr | None:
    """A potential P whose D_x contains this term and is otherwise of lower rank."""
    top, _ = _top_jet(mono)
    if top is None:
        return _x_antiderivative_jetfree(mono, coef)
    if top.x_order == 0:
        return None
    exponents = dict(mono)
    if exponents[top] != 1:
        return None
    lower = Jet(top.base, top.t_order, top.x_order - 1)
    p = exponents.get(lower, Fraction(0))
    if p == -1:
        return None
    exponents.pop(top)
    exponents[lower] = p + 1
    return Expr({(): coef / (p + 1)}) * _from_exponents(exponents)


def _from_exponents(exponents: dict) -> Expr:
    out = ONE
    for a, e in exponents.items():
        out = out * Expr.atom(a, e)
    return out


def _priority(mono) -> tuple:
    top, tfam = _top_jet(mono)
    if top is None:
        return (0, 0, 0)
    return (1 if tfam else 0, top.t_order, top.x_order)


def _greedy(e: Expr, eq: "Equation | None", max_steps: int) -> tuple[Expr, Expr]:
    remainder, potential = e, ZERO
    for _ in range(max_steps):
        step = None
        for mono, coef in sorted(remainder.terms(), key=lambda mc: _priority(mc[0]), reverse=True):
            try:
                step = _peel(mono, coef)
                if step is not None:
                    dstep = total_derivative(step, "x")
            except JetOrderError:
                step = None
            if step is not None:
                break
        if step is None:
            return remainder, potential
        remainder = remainder - dstep
        if eq is not None:
            remainder = restrict_to_solutions(remainder, eq)
        potential = potential + step
    raise SymbolicError("integration by parts did not converge")


def _helmholtz_like_solve(c: Expr, alpha: Fraction, max_steps: int = 50) -> Expr | None:
    """Solve (alpha - D_x^2) d = c for an x-jet polynomial d, or return None."""
    d, r = ZERO, c
    for _ in range(max_steps):
        if r.is_zero():
            return d
        if any(_is_tfamily(j) for j in r.jets()):
            return None
        orders = [j.x_order for j in r.jets() if j.base == "u"]
        n = max(orders, default=0)
        if n >= 2:
            top = Jet("u", 0, n)
            parts = r.coefficients_in(top)
            if set(parts) - {Fraction(0), Fraction(1)}:
                return None
            a = parts.get(Fraction(1), ZERO)
            below = Jet("u", 0, n - 1)
            if below in a.jets():
                return None
            g = -_antiderivative(a, Jet("u", 0, n - 2))
            if g is None:
                return None
        else:
            if r.jets():
                return None
            g = ZERO
            for mono, coef in r.terms():
                rate = dict(mono).get(Exp("x"), Fraction(0))
                if any(isinstance(a, Var) and a.name == "x" for a, _ in mono):
                    return None
                if any((isinstance(a, Func) and "x" in a.args) for a, _ in mono):
                    return None
                denom = alpha - rate * rate
                if denom == 0:
                    return None
                g = g + Expr({mono: coef / denom})
        d = d + g
        r = r - (alpha * g - total_derivative_n(g, 0, 2))
    return None


def _antiderivative(a: Expr, wrt: Jet) -> Expr | None:
    out = ZERO
    for mono, coef in a.terms():
        exps = dict(mono)
        p = exps.get(wrt, Fraction(0))
        if p == -1:
            return None
        exps[wrt] = p + 1
        out = out + Expr({(): coef / (p + 1)}) * _from_exponents(exps)
    return out


def _evolution_split(eq: Equation) -> tuple[Fraction, Expr] | None:
    """For leading u_txx with solved form alpha*u_t + N(x-jets), return (alpha, N)."""
    if eq.leading != Jet(eq.leading.base, 1, 2):
        return None
    base = eq.leading.base
    ut = Jet(base, 1, 0)
    parts = eq.solved_rhs.coefficients_in(ut)
    if set(parts) - {Fraction(0), Fraction(1)}:
        return None
    alpha = parts.get(Fraction(1), ZERO)
    rest = parts.get(Fraction(0), ZERO)
    if not alpha.is_constant() or alpha.is_zero() or any(_is_tfamily(j) for j in rest.jets()):
        return None
    return alpha.constant_value(), rest


def _eliminate_time_linear(remainder: Expr, eq: Equation) -> tuple[Expr, Expr] | None:
    split = _evolution_split(eq)
    if split is None:
        return None
    alpha, N = split
    ut = Jet(eq.leading.base, 1, 0)
    c = ZERO
    for mono, coef in remainder.terms():
        exps = dict(mono)
        tjets = [a for a in exps if isinstance(a, Jet) and _is_tfamily(a)]
        if tjets == [ut] and exps[ut] == 1:
            exps.pop(ut)
            c = c + Expr({(): coef}) * _from_exponents(exps)
    if c.is_zero():
        return None
    d = _helmholtz_like_solve(c, alpha)
    if d is None:
        return None
    utx = Expr.atom(Jet(ut.base, 1, 1))
    ut_e = Expr.atom(ut)
    new_remainder = remainder - c * ut_e - d * N
    potential = d * utx - total_derivative(d, "x") * ut_e
    return new_remainder, potential


def integrate_by_parts_x(
    e: Expr, eq: "Equation | None" = None, max_steps: int = 500
) -> tuple[Expr, Expr]:
    """Split ``e = remainder + D_x(potential)``.

    Terms are lowered greedily by peeling one D_x off the highest jet when it
    occurs linearly.  When ``eq`` is given the identity only holds on the
    solution manifold: terms ``c * u_t`` left over are traded for x-jets via
    the solved equation whenever ``(alpha - D_x^2) d = c`` has a polynomial
    solution ``d`` (``alpha`` being the u_t coefficient of the solved form).
    """
    if eq is not None:
        e = restrict_to_solutions(e, eq)
    remainder, potential = _greedy(e, eq, max_steps)
    if eq is None:
        return remainder, potential
    for _ in range(10):
        step = _eliminate_time_linear(remainder, eq)
        if step is None:
            break
        remainder, extra = step
        potential = potential + extra
        remainder, more = _greedy(restrict_to_solutions(remainder, eq), eq, max_steps)
        potential = potential + more
    return remainder, potential


def integrate_by_parts_t(e: Expr, max_steps: int = 500) -> tuple[Expr, Expr]:
    """Split ``e = remainder + D_t(potential)`` by peeling t-derivatives (off-shell)."""
    swapped = _swap_tx(e)
    remainder, potential = _greedy(swapped, None, max_steps)
    return _swap_tx(remainder), _swap_tx(potential)


def _swap_tx(e: Expr) -> Expr:
    from .symcore import substitute

    mapping = {}
    for a in e.atoms():
        if isinstance(a, Jet):
            mapping[a] = Expr.atom(Jet(a.base, a.x_order, a.t_order))
        elif isinstance(a, Var) and a.name in ("t", "x"):
            mapping[a] = Expr.atom(Var("x" if a.name == "t" else "t"))
        elif isinstance(a, Exp) and a.var in ("t", "x"):
            mapping[a] = Expr.atom(Exp("x" if a.var == "t" else "t"))
        elif isinstance(a, Func) or (isinstance(a, PowBase) and not a.is_surd):
            raise SymbolicError(f"t-integration does not support the atom {a}")
    return substitute(e, mapping)


def jets_of(exprs: Iterable[Expr]) -> set[Jet]:
    out: set[Jet] = set()
    for e in exprs:
        out |= e.jets()
    return out


def divide_by_equation(e: Expr, eq: Equation) -> tuple[Expr, Expr]:
    """Polynomial division by ``eq.lhs`` in its leading jet: e = q * lhs + r, r free of it."""
    y = eq.leading
    q, r = ZERO, e
    for _ in range(1000):
        parts = r.coefficients_in(y)
        exps = [p for p in parts if p != 0]
        if not exps:
            return q, r
        top = max(exps)
        if top.denominator != 1 or top < 1:
            raise SymbolicError(f"{y} occurs with exponent {top}; division needs integer powers")
        step = parts[top] * Expr.atom(y, top - 1) / eq.lead_coeff
        q = q + step
        r = r - step * eq.lhs
    raise SymbolicError("division by the equation did not terminate")
