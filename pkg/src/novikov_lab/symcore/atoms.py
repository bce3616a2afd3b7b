"""Atoms of the jet-space expression algebra.

Every atom is an immutable, hashable value with a total ``sort_key`` so that
normal forms can be ordered deterministically.  The canonical factor order
inside a term is: named constants, jet variables, exponentials, powers of
independent variables, affine-base powers, opaque functions.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterator

if TYPE_CHECKING:
    from .expr import Expr

INDEPENDENT_VARS = ("t", "x", "z")
DEPENDENT_VARS = ("u", "v")
DEFAULT_CONSTANTS = frozenset({"A", "c", "c1", "c2", "k", "alpha", "kappa"})

_MAX_JET_ORDER: contextvars.ContextVar[int] = contextvars.ContextVar("max_jet_order", default=4)


class SymbolicError(Exception):
    """Base class for errors raised by the symbolic core."""


class JetOrderError(SymbolicError):
    """A jet variable would exceed the configured maximum order."""


def max_jet_order() -> int:
    return _MAX_JET_ORDER.get()


@contextlib.contextmanager
def jet_order_limit(n: int) -> Iterator[None]:
    """Temporarily change the maximum jet order (context-local)."""
    if n < 0:
        raise ValueError("jet order limit must be non-negative")
    token = _MAX_JET_ORDER.set(n)
    try:
        yield
    finally:
        _MAX_JET_ORDER.reset(token)


def set_max_jet_order(n: int) -> None:
    if n < 0:
        raise ValueError("jet order limit must be non-negative")
    _MAX_JET_ORDER.set(n)


class Atom:
    rank: int = 99

    @property
    def sort_key(self) -> tuple:
        raise NotImplementedError

    def __lt__(self, other: "Atom") -> bool:
        return self.sort_key < other.sort_key


@dataclass(frozen=True)
class Const(Atom):
    name: str
    rank = 0

    @property
    def sort_key(self) -> tuple:
        return (0, self.name)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Jet(Atom):
    """u_{t^a x^b}; mixed partials commute, so only the two orders are stored."""

    base: str
    t_order: int = 0
    x_order: int = 0
    rank = 1

    def __post_init__(self) -> None:
        if self.base not in DEPENDENT_VARS:
            raise SymbolicError(f"unknown dependent variable {self.base!r}")
        if self.t_order < 0 or self.x_order < 0:
            raise SymbolicError("jet orders must be non-negative")
        if self.t_order + self.x_order > max_jet_order():
            raise JetOrderError(
                f"jet {self.base}_{'t' * self.t_order}{'x' * self.x_order} exceeds "
                f"maximum jet order {max_jet_order()}"
            )

    @property
    def order(self) -> int:
        return self.t_order + self.x_order

    @property
    def sort_key(self) -> tuple:
        return (1, self.base, self.t_order, self.x_order)

    def shifted(self, var: str) -> "Jet":
        if var == "t":
            return Jet(self.base, self.t_order + 1, self.x_order)
        if var == "x":
            return Jet(self.base, self.t_order, self.x_order + 1)
        raise SymbolicError(f"jets carry no derivative in {var!r}")

    def __str__(self) -> str:
        suffix = "t" * self.t_order + "x" * self.x_order
        return f"{self.base}_{suffix}" if suffix else self.base


@dataclass(frozen=True)
class Exp(Atom):
    """exp(var); the rational exponent of the atom in a term is the rate."""

    var: str
    rank = 2

    @property
    def sort_key(self) -> tuple:
        return (2, self.var)


@dataclass(frozen=True)
class Var(Atom):
    name: str
    rank = 3

    def __post_init__(self) -> None:
        if self.name not in INDEPENDENT_VARS:
            raise SymbolicError(f"unknown independent variable {self.name!r}")

    @property
    def sort_key(self) -> tuple:
        return (3, self.name)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PowBase(Atom):
    """A base that cannot be split into atoms: a positive rational surd such as
    2^(1/2), or an affine polynomial in one independent variable such as
    (c - 2*k*t)^(-1/2).  The exponent lives in the enclosing term."""

    base: "Expr | Fraction"
    text: str = field(compare=False, default="")
    rank = 4

    @property
    def sort_key(self) -> tuple:
        if isinstance(self.base, Fraction):
            return (4, 0, self.base, "")
        return (4, 1, Fraction(0), self.text)

    @property
    def is_surd(self) -> bool:
        return isinstance(self.base, Fraction)


@dataclass(frozen=True)
class Func(Atom):
    """Opaque function name(args) with a partial-derivative multi-index."""

    name: str
    args: tuple[str, ...]
    deriv: tuple[int, ...] = ()
    rank = 5

    def __post_init__(self) -> None:
        if not self.deriv:
            object.__setattr__(self, "deriv", (0,) * len(self.args))
        if len(self.deriv) != len(self.args):
            raise SymbolicError("derivative index must match the argument list")
        if len(set(self.args)) != len(self.args):
            raise SymbolicError(f"repeated argument in {self.name}{self.args}")
        for a in self.args:
            if a not in INDEPENDENT_VARS and a not in DEPENDENT_VARS:
                raise SymbolicError(f"opaque function argument {a!r} must be t, x, z, u or v")

    def arg_atoms(self) -> tuple[Atom, ...]:
        return tuple(Jet(a) if a in DEPENDENT_VARS else Var(a) for a in self.args)

    def differentiated(self, arg: str) -> "Func":
        i = self.args.index(arg)
        deriv = list(self.deriv)
        deriv[i] += 1
        return Func(self.name, self.args, tuple(deriv))

    @property
    def sort_key(self) -> tuple:
        return (5, self.name, self.args, self.deriv)

    def __str__(self) -> str:
        argtxt = ",".join(self.args)
        if len(self.args) == 1:
            return f"{self.name}{chr(39) * self.deriv[0]}({argtxt})"
        suffix = "".join(a * n for a, n in zip(self.args, self.deriv))
        name = f"{self.name}_{suffix}" if suffix else self.name
        return f"{name}({argtxt})"


def u(t_order: int = 0, x_order: int = 0) -> Jet:
    return Jet("u", t_order, x_order)


def v(t_order: int = 0, x_order: int = 0) -> Jet:
    return Jet("v", t_order, x_order)
