import time
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from novikov_lab.fixtures import field_from_text, generator, novikov, novikov_basis
from novikov_lab.symcore import Jet, SymbolicError, parse
from novikov_lab.symmetry import (
    ClosureError,
    VectorField,
    characteristic,
    check_symmetry,
    closure_check,
    determining_system,
    lie_bracket,
    prolong,
    rank_of,
    reflect_x,
)
from oracle import exprs

EQ = novikov()
SYSTEM = determining_system(EQ)
SCALING_ONLY = field_from_text("0", "0", "u", "S")


@pytest.mark.parametrize(
    "name, expected",
    [("X1", "-u_t"), ("X2", "-u_x"), ("X3", "exp(2*x)*u - exp(2*x)*u_x"), ("X5", "u + 2*t*u_t")],
)
def test_characteristic(name, expected):
    assert characteristic(generator(name)) == parse(expected)


def test_prolongation_coefficients():
    assert all(c.is_zero() for j, c in prolong(generator("X2"), 3).coeffs.items() if j.order)
    assert prolong(generator("X5"), 3).coeffs[Jet("u", 1, 0)] == parse("3*u_t")
    assert prolong(generator("X3"), 3).coeffs[Jet("u", 0, 1)] == parse("2*exp(2*x)*u - exp(2*x)*u_x")
    assert prolong(generator("X5"), 3).coeffs[Jet("u")] == parse("u")


def test_prolongation_recursion_spot_check():
    # eta^J for J = tx computed from the recursion D_x(eta^t) - u_tt D_x(xi0) - u_tx D_x(xi1)
    X = generator("X3")
    p = prolong(X, 3)
    from novikov_lab.jetcalc import total_derivative

    eta_t = p.coeffs[Jet("u", 1, 0)]
    rec = total_derivative(eta_t, "x") - parse("u_tt") * total_derivative(X.xi_t, "x") - parse("u_tx") * total_derivative(X.xi_x, "x")
    assert p.coeffs[Jet("u", 1, 1)] == rec


def test_basis_generators_are_symmetries():
    start = time.perf_counter()
    multipliers = {}
    for X in novikov_basis():
        rep = check_symmetry(X, EQ)
        assert rep.is_symmetry, X.name
        assert rep.on_shell_residual.is_zero()
        multipliers[X.name] = str(rep.off_shell_multiplier)
    assert time.perf_counter() - start < 10
    assert multipliers == {"X1": "0", "X2": "0", "X3": "-3*exp(2*x)", "X4": "3*exp(-2*x)", "X5": "3"}


def test_scaling_of_u_alone_is_not_a_symmetry():
    rep = check_symmetry(SCALING_ONLY, EQ)
    assert not rep.is_symmetry
    assert rep.on_shell_residual == parse("-6*u*u_x*u_xx + 8*u^2*u_x - 2*u^2*u_xxx")


def test_point_field_rejects_jets():
    with pytest.raises(SymbolicError):
        VectorField(parse("u_x"), parse("0"), parse("0"))


def test_determining_system_accepts_basis_only():
    assert len(SYSTEM) > 0
    for c in SYSTEM.constraints:
        assert not any(j.order for j in c.jets())
    for X in novikov_basis():
        assert SYSTEM.is_satisfied_by(X), X.name
    assert not SYSTEM.is_satisfied_by(SCALING_ONLY)


@pytest.mark.parametrize(
    "a, b, expected",
    [("X1", "X2", (0, 0, 0, 0, 0)), ("X2", "X3", (0, 0, 2, 0, 0)), ("X1", "X5", (-2, 0, 0, 0, 0)),
     ("X2", "X4", (0, 0, 0, -2, 0)), ("X3", "X4", (0, -4, 0, 0, 0)), ("X3", "X5", (0, 0, 0, 0, 0))],
)
def test_structure_constants(a, b, expected):
    table = closure_check(novikov_basis())
    i, j = table.names.index(a), table.names.index(b)
    assert table.bracket(i, j) == tuple(Fraction(c) for c in expected)
    assert table.bracket(j, i) == tuple(-Fraction(c) for c in expected)


def test_closure_edge_cases():
    assert closure_check([generator("X1")]).bracket(0, 0) == (0,)
    table = closure_check([generator("X2"), SCALING_ONLY])
    assert table.bracket(0, 1) == (0, 0)
    with pytest.raises(ClosureError):
        closure_check([generator("X1"), field_from_text("t^2", "0", "0", "Q")])


def test_basis_is_five_dimensional():
    assert rank_of(novikov_basis()) == 5


def test_reflection_maps_x3_onto_x4_line():
    image = reflect_x(generator("X3"))
    x4 = generator("X4")
    assert image.components == tuple(-c for c in x4.components)
    assert rank_of([image, x4]) == 1


fields = st.builds(
    lambda a, b, c: VectorField(a, b, c),
    exprs(jets=[Jet("u")]),
    exprs(jets=[Jet("u")]),
    exprs(jets=[Jet("u")]),
)


@settings(max_examples=25, deadline=None)
@given(fields, fields)
def test_bracket_antisymmetric(X, Y):
    assert lie_bracket(X, Y) == lie_bracket(Y, X).scaled(-1)


@settings(max_examples=15, deadline=None)
@given(fields, fields, fields)
def test_jacobi_identity(X, Y, Z):
    total = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) + lie_bracket(Z, lie_bracket(X, Y))
    assert total.is_zero()


coeffs = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=3), min_size=6, max_size=6)


@settings(max_examples=10, deadline=None)
@given(coeffs)
def test_symmetry_check_agrees_with_determining_system(cs):
    X = VectorField(parse("0"), parse("0"), parse("0"))
    for c, g in zip(cs, novikov_basis() + [SCALING_ONLY]):
        X = X + g.scaled(c)
    assert check_symmetry(X, EQ).is_symmetry == SYSTEM.is_satisfied_by(X) == (cs[5] == 0)
