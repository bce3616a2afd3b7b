"""Built-in equations and generator bases."""

from __future__ import annotations

from .jetcalc import Equation
from .symcore import parse
from .symmetry import VectorField

NOVIKOV_TEXT = "u_t - u_txx + 4*u^2*u_x - 3*u*u_x*u_xx - u^2*u_xxx"
# residual form of u_t + 2 kappa u_x - u_xxt + 3 u u_x = 2 u_x u_xx + u u_xxx
CAMASSA_HOLM_TEXT = "u_t + 2*kappa*u_x - u_txx + 3*u*u_x - 2*u_x*u_xx - u*u_xxx"
BURGERS_TEXT = "u_t + u*u_x - u_xx"

# reference form of the Novikov adjoint
NOVIKOV_ADJOINT_TEXT = (
    "-v_t + v_txx - 4*u^2*v_x + 3*u*v_x*u_xx - 3*v*u_x*u_xx + 3*u*u_x*v_xx + u^2*v_xxx"
)
# conserved vector generated by the scaling symmetry and its divergence multiplier
H1_DENSITY_TEXT = "u^2 + u_x^2"
H1_FLUX_TEXT = "2*u^4 - 2*u^3*u_xx - 2*u*u_tx"
H1_MULTIPLIER_TEXT = "2*u"

NOVIKOV_BASIS_TEXT = {
    "X1": ("1", "0", "0"),
    "X2": ("0", "1", "0"),
    "X3": ("0", "exp(2*x)", "exp(2*x)*u"),
    "X4": ("0", "exp(-2*x)", "-exp(-2*x)*u"),
    "X5": ("-2*t", "0", "u"),
}

EQUATIONS = {
    "novikov": NOVIKOV_TEXT,
    "camassa-holm": CAMASSA_HOLM_TEXT,
    "burgers": BURGERS_TEXT,
}


def equation(name_or_text: str) -> Equation:
    """A built-in fixture by name, or an equation residual given as text."""
    text = EQUATIONS.get(name_or_text, name_or_text)
    name = name_or_text if name_or_text in EQUATIONS else ""
    return Equation.from_lhs(parse(text), name=name)


def novikov() -> Equation:
    return equation("novikov")


def camassa_holm() -> Equation:
    return equation("camassa-holm")


def field_from_text(xi_t: str, xi_x: str, eta: str, name: str = "") -> VectorField:
    return VectorField(parse(xi_t), parse(xi_x), parse(eta), name=name)


def novikov_basis() -> list[VectorField]:
    return [field_from_text(*coeffs, name=name) for name, coeffs in NOVIKOV_BASIS_TEXT.items()]


def generator(name: str) -> VectorField:
    return field_from_text(*NOVIKOV_BASIS_TEXT[name], name=name)
