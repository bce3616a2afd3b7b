import pytest
from hypothesis import given, settings, strategies as st

from novikov_lab.adjoint import (
    adjoint_equation,
    check_strict_self_adjointness,
    check_substitution,
    formal_lagrangian,
    ordered_partial,
    v_to_u,
)
from novikov_lab.fixtures import NOVIKOV_ADJOINT_TEXT, camassa_holm, equation, novikov
from novikov_lab.jetcalc import Equation, euler_operator
from novikov_lab.symcore import Jet, parse

EQ = novikov()


def test_formal_lagrangian():
    L = formal_lagrangian(EQ)
    assert L.expr == parse("v") * EQ.lhs
    assert (L.expr - L.symmetric_form).is_zero()
    assert formal_lagrangian(Equation.from_lhs(parse("u_t"))).expr == parse("v*u_t")


def test_ordered_partial_spreads_over_orderings():
    L = formal_lagrangian(EQ).expr
    parts = [ordered_partial(L, idx) for idx in (("t", "x", "x"), ("x", "t", "x"), ("x", "x", "t"))]
    assert parts[0] == parts[1] == parts[2] == parse("-1/3*v")
    assert sum(parts, parse("0")) == parse("-v")


def test_novikov_adjoint_matches_reference_form():
    assert adjoint_equation(EQ) == parse(NOVIKOV_ADJOINT_TEXT)


@pytest.mark.parametrize(
    "lhs, expected",
    [("u_t", "-v_t"), ("4*u^2*u_x", "-4*u^2*v_x")],
)
def test_adjoint_small_cases(lhs, expected):
    assert adjoint_equation(Equation.from_lhs(parse(lhs + " + u_tx"), leading=Jet("u", 1, 1))) == parse(
        expected + " + v_tx"
    )


def test_quartic_term_by_expansion():
    # E_u(4 v u^2 u_x) = 8 u u_x v - D_x(4 u^2 v)
    assert euler_operator(parse("4*v*u^2*u_x")) == parse("8*u*u_x*v") - parse("8*u*u_x*v + 4*u^2*v_x")


def test_strict_self_adjointness():
    res = check_strict_self_adjointness(EQ)
    assert res.holds and res.factor == parse("-1")
    assert (v_to_u(adjoint_equation(EQ)) + EQ.lhs).is_zero()
    ch = check_strict_self_adjointness(camassa_holm())
    assert ch.holds and ch.factor == parse("-1")
    assert not check_strict_self_adjointness(equation("burgers")).holds


def test_substitutions():
    assert check_substitution(EQ, parse("alpha*u")).holds
    bad = check_substitution(EQ, parse("u^2"))
    assert not bad.holds and not bad.residual.is_zero()
    zero = check_substitution(EQ, parse("0"))
    assert zero.holds and zero.degenerate


@given(st.sampled_from(["novikov", "camassa-holm", "burgers"]))
@settings(max_examples=3, deadline=None)
def test_strictness_implies_identity_substitution(name):
    eq = equation(name)
    if check_strict_self_adjointness(eq).holds:
        assert check_substitution(eq, parse("u")).holds


@settings(max_examples=6, deadline=None)
@given(st.fractions(min_value=-5, max_value=5, max_denominator=5))
def test_any_multiple_of_u_is_admissible(a):
    assert check_substitution(EQ, parse(str(a)) * parse("u")).holds
