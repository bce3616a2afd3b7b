"""Text rendering of normal forms in the input grammar (round-trips through parse)."""

from __future__ import annotations

from fractions import Fraction

from .atoms import Atom, Exp, PowBase, Var


def _exponent(e: Fraction) -> str:
    if e == 1:
        return ""
    if e.denominator == 1 and e > 0:
        return f"^{e.numerator}"
    return f"^({e})"


def _linear_text(rates: list[tuple[str, Fraction]]) -> str:
    from .expr import Expr

    lin = Expr()
    for name, rate in rates:
        lin = lin + rate * Expr.atom(Var(name))
    return to_text(lin)


def _factor_text(a: Atom, e: Fraction) -> str:
    if isinstance(a, PowBase):
        if a.is_surd:
            return f"{a.base}{_exponent(e)}"
        return f"({a.text}){_exponent(e)}"
    return f"{a}{_exponent(e)}"


def term_text(mono, coef: Fraction) -> str:
    """Render one term without its sign."""
    factors = []
    rates = [(a.var, e) for a, e in mono if isinstance(a, Exp)]
    exp_done = False
    for a, e in mono:
        if isinstance(a, Exp):
            if not exp_done:
                factors.append(f"exp({_linear_text(rates)})")
                exp_done = True
            continue
        factors.append(_factor_text(a, e))
    mag = abs(coef)
    if not factors:
        return str(mag)
    if mag != 1:
        factors.insert(0, str(mag))
    return "*".join(factors)


def to_text(e) -> str:
    pieces = []
    for i, (mono, coef) in enumerate(e.terms()):
        body = term_text(mono, coef)
        if i == 0:
            pieces.append(f"-{body}" if coef < 0 else body)
        else:
            pieces.append(f" - {body}" if coef < 0 else f" + {body}")
    return "".join(pieces) if pieces else "0"


__all__ = ["to_text", "term_text"]
