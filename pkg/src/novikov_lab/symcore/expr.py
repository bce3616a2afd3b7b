"""Canonical sums of rational-coefficient monomials over jet-space atoms."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Mapping, Union

from .atoms import (
    DEPENDENT_VARS,
    INDEPENDENT_VARS,
    Atom,
    Const,
    Exp,
    Func,
    Jet,
    PowBase,
    SymbolicError,
    Var,
)

Monomial = tuple[tuple[Atom, Fraction], ...]
Number = Union[int, Fraction]


class EvaluationError(SymbolicError):
    """Numeric evaluation failed (unbound atom, complex result)."""


def _as_fraction(q: Number) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, (int, Rational)):
        return Fraction(q)
    raise TypeError(f"exact rational expected, got {type(q).__name__}")


def _mono_key(m: Monomial) -> tuple:
    degree = sum(e for a, e in m if isinstance(a, Jet))
    return (degree, tuple((a.sort_key, e) for a, e in m))


def _int_root(n: int, k: int) -> int | None:
    if n < 0:
        return None
    r = round(n ** (1.0 / k)) if n else 0
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def rational_power(q: Fraction, r: Fraction) -> Fraction | None:
    """q**r when the result is rational, otherwise None."""
    if r.denominator == 1:
        if q == 0 and r < 0:
            raise ZeroDivisionError("zero raised to a negative power")
        return q ** int(r)
    if q < 0:
        return None
    num = _int_root(q.numerator, r.denominator)
    den = _int_root(q.denominator, r.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** r.numerator


class Expr:
    """Immutable canonical expression.

    The normal form is a map from monomials (sorted atom/exponent tuples) to
    non-zero rational coefficients; zero is the empty map.  Two expressions
    are equal exactly when their normal forms coincide.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        items = {} if terms is None else {m: c for m, c in terms.items() if c != 0}
        self._terms: dict[Monomial, Fraction] = dict(sorted(items.items(), key=lambda kv: _mono_key(kv[0])))
        self._hash: int | None = None

    # construction -----------------------------------------------------
    @staticmethod
    def const(q: Number) -> "Expr":
        q = _as_fraction(q)
        return Expr({(): q}) if q else ZERO

    @staticmethod
    def atom(a: Atom, exponent: Number = 1) -> "Expr":
        return _build_term(Fraction(1), [(a, _as_fraction(exponent))])

    @staticmethod
    def coerce(obj: "Expr | Number") -> "Expr":
        if isinstance(obj, Expr):
            return obj
        if isinstance(obj, Atom):
            return Expr.atom(obj)
        return Expr.const(obj)

    # inspection -------------------------------------------------------
    def terms(self) -> Iterator[tuple[Monomial, Fraction]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise SymbolicError(f"{self} is not a rational constant")
        return self._terms.get((), Fraction(0))

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def atoms(self) -> set[Atom]:
        return {a for m in self._terms for a, _ in m}

    def jets(self) -> set[Jet]:
        return {a for a in self.atoms() if isinstance(a, Jet)}

    def funcs(self) -> set[Func]:
        return {a for a in self.atoms() if isinstance(a, Func)}

    def depends_on_var(self, name: str) -> bool:
        """Explicit dependence on an independent variable (not via jets)."""
        for a in self.atoms():
            if isinstance(a, (Var, Exp)) and getattr(a, "name", getattr(a, "var", None)) == name:
                return True
            if isinstance(a, Func) and name in a.args:
                return True
            if isinstance(a, PowBase) and not a.is_surd and a.base.depends_on_var(name):
                return True
        return False

    def degree_in(self, a: Atom) -> Fraction:
        degs = [dict(m).get(a, Fraction(0)) for m in self._terms]
        return max(degs, default=Fraction(0))

    def coefficients_in(self, a: Atom) -> dict[Fraction, "Expr"]:
        """Split by the exponent of ``a``: self = sum(coeff * a**e)."""
        out: dict[Fraction, dict[Monomial, Fraction]] = {}
        for m, c in self._terms.items():
            e = Fraction(0)
            rest = []
            for b, be in m:
                if b == a:
                    e = be
                else:
                    rest.append((b, be))
            out.setdefault(e, {})[tuple(rest)] = c
        return {e: Expr(t) for e, t in out.items()}

    def collect(self, select: Callable[[Atom], bool]) -> dict[Monomial, "Expr"]:
        """Group by the sub-monomial formed by the selected atoms."""
        out: dict[Monomial, dict[Monomial, Fraction]] = {}
        for m, c in self._terms.items():
            key = tuple(p for p in m if select(p[0]))
            rest = tuple(p for p in m if not select(p[0]))
            bucket = out.setdefault(key, {})
            bucket[rest] = bucket.get(rest, Fraction(0)) + c
        return {k: Expr(v) for k, v in sorted(out.items(), key=lambda kv: _mono_key(kv[0]))}

    # arithmetic -------------------------------------------------------
    def __add__(self, other: "Expr | Number") -> "Expr":
        other = Expr.coerce(other)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return Expr(terms)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: "Expr | Number") -> "Expr":
        return self + (-Expr.coerce(other))

    def __rsub__(self, other: "Expr | Number") -> "Expr":
        return Expr.coerce(other) - self

    def __mul__(self, other: "Expr | Number") -> "Expr":
        other = Expr.coerce(other)
        if self.is_zero() or other.is_zero():
            return ZERO
        acc: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                prod = _build_term(c1 * c2, list(m1) + list(m2))
                for m, c in prod._terms.items():
                    acc[m] = acc.get(m, Fraction(0)) + c
        return Expr(acc)

    __rmul__ = __mul__

    def __truediv__(self, other: "Expr | Number") -> "Expr":
        other = Expr.coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero expression")
        if not other.is_monomial():
            raise SymbolicError(f"division by the non-monomial {other} is not supported")
        return self * other ** -1

    def __rtruediv__(self, other: "Expr | Number") -> "Expr":
        return Expr.coerce(other) / self

    def __pow__(self, r: Number) -> "Expr":
        r = _as_fraction(r)
        if r.denominator == 1 and r >= 0:
            result, base, n = ONE, self, int(r)
            while n:
                if n & 1:
                    result = result * base
                base = base * base
                n >>= 1
            return result
        if self.is_zero():
            raise ZeroDivisionError("zero raised to a negative or fractional power")
        if not self.is_monomial():
            return _affine_power(self, r)
        ((m, c),) = self._terms.items()
        factors = [(a, e * r) for a, e in m]
        coef = rational_power(c, r)
        if coef is None:
            if c < 0:
                raise SymbolicError(f"negative coefficient raised to the non-integer power {r}")
            factors.append((PowBase(c, str(c)), r))
            coef = Fraction(1)
        return _build_term(coef, factors)

    # comparison -------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def __str__(self) -> str:
        from .printer import to_text

        return to_text(self)

    def __repr__(self) -> str:
        return f"Expr({str(self)!r})"


ZERO = Expr()
ONE = Expr({(): Fraction(1)})


def _affine_power(base: Expr, r: Fraction) -> Expr:
    # affine in exactly one independent variable, constants-only coefficients
    variables = set()
    for m, _ in base.terms():
        for a, e in m:
            if isinstance(a, Var) and e == 1:
                variables.add(a.name)
            elif not isinstance(a, Const):
                raise SymbolicError(
                    f"power {r} of the non-monomial {base} is unsupported "
                    "(only affine bases in one independent variable)"
                )
        if sum(e for a, e in m if isinstance(a, Var)) > 1:
            raise SymbolicError(f"power {r} of the non-affine {base} is unsupported")
    if len(variables) > 1:
        raise SymbolicError(f"power {r} of {base} mixes independent variables")
    return _build_term(Fraction(1), [(PowBase(base, str(base)), r)])


def _build_term(coef: Fraction, factors: Iterable[tuple[Atom, Fraction]]) -> Expr:
    merged: dict[Atom, Fraction] = {}
    for a, e in factors:
        merged[a] = merged.get(a, Fraction(0)) + e
    expanded: list[Expr] = []
    mono = []
    for a, e in merged.items():
        if e == 0:
            continue
        if isinstance(a, PowBase):
            if a.is_surd:
                whole = math.floor(e)
                frac = e - whole
                coef *= a.base ** whole
                if frac:
                    mono.append((a, frac))
                continue
            if e.denominator == 1 and e > 0:
                expanded.append(a.base ** int(e))
                continue
        mono.append((a, e))
    mono.sort(key=lambda p: p[0].sort_key)
    out = Expr({tuple(mono): coef}) if coef else ZERO
    for factor in expanded:
        out = out * factor
    return out


# calculus -----------------------------------------------------------------

def _factor_derivative(a: Atom, e: Fraction, target: Atom) -> Expr:
    """d/d(target) of a**e, treating everything else as independent."""
    if a == target:
        return e * Expr.atom(a, e - 1)
    if isinstance(a, Exp) and isinstance(target, Var) and a.var == target.name:
        return e * Expr.atom(a, e)
    if isinstance(a, Func):
        name = None
        if isinstance(target, Var):
            name = target.name
        elif isinstance(target, Jet) and target.t_order == 0 and target.x_order == 0:
            name = target.base
        if name is not None and name in a.args:
            return e * Expr.atom(a, e - 1) * Expr.atom(a.differentiated(name))
        return ZERO
    if isinstance(a, PowBase) and not a.is_surd and isinstance(target, Var):
        inner = diff(a.base, target)
        if inner.is_zero():
            return ZERO
        return e * Expr.atom(a, e - 1) * inner
    return ZERO


def diff(e: Expr, target: Atom) -> Expr:
    """Partial derivative with respect to a jet, independent variable or constant."""
    if not isinstance(target, (Jet, Var, Const)):
        raise SymbolicError(f"cannot differentiate with respect to {target!r}")
    acc = ZERO
    for m, c in e.terms():
        for i, (a, ae) in enumerate(m):
            d = _factor_derivative(a, ae, target)
            if d.is_zero():
                continue
            rest = _build_term(c, m[:i] + m[i + 1 :])
            acc = acc + rest * d
    return acc


def substitute(e: Expr, mapping: Mapping[Atom, Expr]) -> Expr:
    """Replace atoms by expressions (simultaneously)."""
    if not mapping:
        return e
    acc = ZERO
    for m, c in e.terms():
        term = Expr.const(c)
        kept = []
        for a, ae in m:
            if a in mapping:
                term = term * (Expr.coerce(mapping[a]) ** ae)
            else:
                kept.append((a, ae))
        acc = acc + term * _build_term(Fraction(1), kept)
    return acc


def map_atoms(e: Expr, fn: Callable[[Atom], Expr | None]) -> Expr:
    """Substitute every atom for which ``fn`` returns an expression."""
    mapping = {}
    for a in e.atoms():
        r = fn(a)
        if r is not None:
            mapping[a] = r
    return substitute(e, mapping)


def substitute_functions(e: Expr, definitions: Mapping[str, Expr]) -> Expr:
    """Replace opaque functions (and their derivatives) by closed forms."""

    def repl(a: Atom) -> Expr | None:
        if not isinstance(a, Func) or a.name not in definitions:
            return None
        out = definitions[a.name]
        for arg_atom, n in zip(a.arg_atoms(), a.deriv):
            for _ in range(n):
                out = diff(out, arg_atom)
        return out

    return map_atoms(e, repl)


# numerics -----------------------------------------------------------------

def _resolve_bindings(bindings: Mapping) -> dict:
    from .parser import parse_atom

    out = {}
    for key, val in bindings.items():
        if isinstance(key, str) and not callable(val):
            key = parse_atom(key)
        out[key] = val
    return out


def _fpow(base: float, e: Fraction) -> float:
    if e.denominator == 1:
        return float(base) ** int(e)
    if base < 0:
        raise EvaluationError(f"negative base {base} raised to the non-integer power {e}")
    return float(base) ** float(e)


def eval_numeric(e: Expr, bindings: Mapping) -> float:
    """Evaluate at double precision.

    ``bindings`` maps atoms (or their textual names) to floats; opaque
    functions are bound to callables ``fn(*arg_values, deriv=(..))``.
    """
    env = _resolve_bindings(bindings)

    def lookup(a: Atom) -> float:
        try:
            return float(env[a])
        except KeyError:
            raise EvaluationError(f"unbound atom {a}") from None

    parts = []
    for m, c in e.terms():
        val = float(c)
        for a, ae in m:
            if isinstance(a, (Var, Jet, Const)):
                val *= _fpow(lookup(a), ae)
            elif isinstance(a, Exp):
                val *= math.exp(float(ae) * lookup(Var(a.var)))
            elif isinstance(a, PowBase):
                base = float(a.base) if a.is_surd else eval_numeric(a.base, env)
                val *= _fpow(base, ae)
            elif isinstance(a, Func):
                fn = env.get(a.name, env.get(Func(a.name, a.args)))
                if fn is None or not callable(fn):
                    raise EvaluationError(f"opaque function {a.name} needs a callable binding")
                args = [lookup(x) for x in a.arg_atoms()]
                val *= _fpow(fn(*args, deriv=a.deriv), ae)
        parts.append(val)
    return math.fsum(parts)


# convenience --------------------------------------------------------------

def var(name: str) -> Expr:
    return Expr.atom(Var(name))


def const(name: str) -> Expr:
    return Expr.atom(Const(name))


def jet(base: str = "u", t_order: int = 0, x_order: int = 0) -> Expr:
    return Expr.atom(Jet(base, t_order, x_order))


def exp(rate: Number, name: str) -> Expr:
    return Expr.atom(Exp(name), rate)


def func(name: str, *args: str, deriv: tuple[int, ...] = ()) -> Expr:
    return Expr.atom(Func(name, tuple(args), deriv))


__all__ = [
    "DEPENDENT_VARS",
    "INDEPENDENT_VARS",
    "EvaluationError",
    "Expr",
    "Monomial",
    "ONE",
    "ZERO",
    "const",
    "diff",
    "eval_numeric",
    "exp",
    "func",
    "jet",
    "map_atoms",
    "rational_power",
    "substitute",
    "substitute_functions",
    "var",
]


def lambdify(e: Expr, arguments: list[Atom], constants: Mapping[Atom, float] | None = None) -> Callable[..., float]:
    """Compile to a plain Python function of the given atoms (positional floats)."""
    constants = dict(constants or {})
    names = {a: f"a{i}" for i, a in enumerate(arguments)}
    env: dict[str, object] = {"exp": math.exp}
    for i, (a, val) in enumerate(constants.items()):
        names[a] = f"k{i}"
        env[f"k{i}"] = float(val)
    terms = []
    for m, c in e.terms():
        factors = [repr(float(c))]
        for a, ae in m:
            if isinstance(a, Exp):
                key = Var(a.var)
                if key not in names:
                    raise EvaluationError(f"unbound atom {a.var}")
                factors.append(f"exp({float(ae)!r}*{names[key]})")
                continue
            if isinstance(a, PowBase) and a.is_surd:
                factors.append(repr(float(a.base) ** float(ae)))
                continue
            if a not in names:
                raise EvaluationError(f"unbound atom {a}")
            power = str(int(ae)) if ae.denominator == 1 else repr(float(ae))
            factors.append(f"{names[a]}**{power}" if ae != 1 else names[a])
        terms.append("*".join(factors))
    body = " + ".join(terms) if terms else "0.0"
    src = f"def _f({', '.join(f'a{i}' for i in range(len(arguments)))}):\n    return {body}\n"
    exec(compile(src, "<lambdify>", "exec"), env)
    return env["_f"]  # type: ignore[return-value]
