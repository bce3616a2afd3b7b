"""Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := ('-'|'+') unary | power
    power  := base ('^' exponent)?
    base   := number | ident | ident '(' args ')' | 'exp' '(' expr ')' | '(' expr ')'

Exponents must reduce to rational constants.  Derivative suffixes of jets
are sorted on the way in, so ``u_xtx`` and ``u_txx`` parse to the same atom.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .atoms import (
    DEFAULT_CONSTANTS,
    DEPENDENT_VARS,
    INDEPENDENT_VARS,
    Atom,
    Const,
    Exp,
    Func,
    Jet,
    JetOrderError,
    SymbolicError,
    Var,
)
from .expr import ONE, Expr


class ParseError(SymbolicError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ParseError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z][A-Za-z0-9_]*'*)|(?P<op>[-+*/^(),]))"
)
_JET = re.compile(r"^(?P<base>[uv])(?:_(?P<suffix>[tx]+))?$")
_FUNC = re.compile(r"^(?P<name>[A-Za-z][A-Za-z0-9]*)(?:_(?P<suffix>[a-z]+))?(?P<primes>'*)$")
_RESERVED = set(DEPENDENT_VARS) | set(INDEPENDENT_VARS) | {"exp"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text[pos:]) - len(text[pos:].lstrip()) + pos
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, constants: frozenset[str]):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.constants = constants

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            what = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise ParseError(f"expected {text!r}, found {what}", self.tok.offset)
        return self.advance()

    def fail(self) -> None:
        what = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
        raise ParseError(f"syntax error: unexpected {what}", self.tok.offset)

    # grammar ----------------------------------------------------------
    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "eof":
            self.fail()
        return e

    def expr(self) -> Expr:
        acc = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> Expr:
        acc = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                acc = acc * rhs
            else:
                try:
                    acc = acc / rhs
                except (SymbolicError, ZeroDivisionError) as exc:
                    raise ParseError(str(exc), op.offset) from exc
        return acc

    def unary(self) -> Expr:
        if self.tok.text == "-":
            self.advance()
            return -self.unary()
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.base()
        if self.tok.text != "^":
            return base
        op = self.advance()
        start = self.tok.offset
        if self.tok.text == "-":
            self.advance()
            exponent = -self.base()
        else:
            exponent = self.base()
        if not exponent.is_constant():
            raise ParseError("exponent must be a rational constant", start)
        try:
            return base ** exponent.constant_value()
        except (SymbolicError, ZeroDivisionError) as exc:
            raise ParseError(str(exc), op.offset) from exc

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Expr.const(Fraction(tok.text))
        if tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            self.advance()
            if self.tok.text == "(":
                if tok.text == "exp":
                    return self.exponential(tok)
                return self.function(tok)
            return Expr.atom(self.identifier(tok))
        self.fail()
        raise AssertionError("unreachable")

    def exponential(self, tok: Token) -> Expr:
        self.expect("(")
        start = self.tok.offset
        arg = self.expr()
        self.expect(")")
        return exp_of_linear(arg, start)

    def function(self, tok: Token) -> Expr:
        m = _FUNC.match(tok.text)
        if not m or m.group("name") in _RESERVED or m.group("name") in self.constants:
            raise UnknownIdentifier(f"unknown function {tok.text!r}", tok.offset)
        self.expect("(")
        args = []
        while True:
            a = self.advance()
            if a.kind != "ident" or (a.text not in INDEPENDENT_VARS and a.text not in DEPENDENT_VARS):
                raise ParseError("function arguments must be among t, x, z, u, v", a.offset)
            args.append(a.text)
            if self.tok.text == ",":
                self.advance()
                continue
            self.expect(")")
            break
        deriv = [0] * len(args)
        primes = len(m.group("primes"))
        if primes:
            if len(args) != 1 or m.group("suffix"):
                raise ParseError("primes denote derivatives of one-argument functions only", tok.offset)
            deriv[0] = primes
        for ch in m.group("suffix") or "":
            if ch not in args:
                raise ParseError(f"derivative in {ch!r} is not an argument", tok.offset)
            deriv[args.index(ch)] += 1
        try:
            return Expr.atom(Func(m.group("name"), tuple(args), tuple(deriv)))
        except SymbolicError as exc:
            raise ParseError(str(exc), tok.offset) from exc

    def identifier(self, tok: Token) -> Atom:
        try:
            return resolve_identifier(tok.text, self.constants)
        except UnknownIdentifier as exc:
            raise UnknownIdentifier(str(exc).rsplit(" at offset", 1)[0], tok.offset) from None
        except JetOrderError as exc:
            raise ParseError(str(exc), tok.offset) from exc


def resolve_identifier(name: str, constants: frozenset[str] = DEFAULT_CONSTANTS) -> Atom:
    m = _JET.match(name)
    if m:
        suffix = m.group("suffix") or ""
        return Jet(m.group("base"), suffix.count("t"), suffix.count("x"))
    if name in INDEPENDENT_VARS:
        return Var(name)
    if name in constants:
        return Const(name)
    raise UnknownIdentifier(f"unknown identifier {name!r}", 0)


def exp_of_linear(arg: Expr, offset: int = 0) -> Expr:
    """exp of a rational-linear combination of independent variables."""
    out = ONE
    for mono, coef in arg.terms():
        if len(mono) != 1 or not isinstance(mono[0][0], Var) or mono[0][1] != 1:
            raise ParseError(
                f"exp() argument must be linear in t, x, z with rational coefficients, got {arg}",
                offset,
            )
        out = out * Expr.atom(Exp(mono[0][0].name), coef)
    return out


def parse(text: str, constants: frozenset[str] | set[str] = DEFAULT_CONSTANTS) -> Expr:
    """Parse text into a normalized expression."""
    return _Parser(text, frozenset(constants)).parse()


def parse_atom(text: str, constants: frozenset[str] | set[str] = DEFAULT_CONSTANTS) -> Atom:
    """Parse a single atom name (used for numeric bindings)."""
    e = parse(text, constants)
    if not e.is_monomial():
        raise ParseError(f"{text!r} is not a single atom", 0)
    ((mono, coef),) = e.terms()
    if coef != 1 or len(mono) != 1 or mono[0][1] != 1:
        if len(mono) == 1 and isinstance(mono[0][0], Func):
            return Func(mono[0][0].name, mono[0][0].args)
        raise ParseError(f"{text!r} is not a single atom", 0)
    return mono[0][0]
