from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from dpwcmc.ratfun import (
    CRat,
    LogarithmicObstruction,
    ParseError,
    RationalMap,
    antiderivative,
    derivative,
    format_rational,
    local_expansion,
    order_at,
    parse_crat,
    parse_potential_text,
    parse_rational,
    residue,
    roots,
)
from strategies import exact_points, rational_maps

I = CRat(0, 1)
z = RationalMap.z()


def R(text):
    return parse_rational(text)


# --- order_at -------------------------------------------------------------
def test_order_at_examples():
    assert order_at(R("(z-1)^2"), 1) == 2
    assert order_at(R("1/(z-i)^4"), I) == -4
    assert order_at(R("z/(z-2)"), 3) == 0


def test_order_of_zero_map_is_undefined():
    with pytest.raises(ValueError):
        order_at(RationalMap(), 0)


# --- residue --------------------------------------------------------------
def test_residue_examples():
    assert residue(R("1/(z-1)"), 1) == 1
    assert residue(R("1/(z-1)^2"), 1) == 0
    assert residue(R("2*z/(z^2+1)"), I) == 1


def test_residue_partial_fraction_oracle():
    # 3/(z-1) + 5/(z+2)^2 - 7/(z-i), assembled by hand
    r = 3 / RationalMap.linear(1) + 5 / RationalMap.linear(-2) ** 2 - 7 / RationalMap.linear(I)
    assert residue(r, 1) == 3
    assert residue(r, -2) == 0
    assert residue(r, I) == -7


# --- local_expansion ------------------------------------------------------
def test_local_expansion_geometric():
    ex = local_expansion(R("1/(1-z)"), 0, 3)
    assert ex.leading_order == 0
    assert list(ex.coefficients) == [1, 1, 1]


def test_local_expansion_linear():
    z0 = CRat(Fraction(1, 3), 2)
    ex = local_expansion(RationalMap.linear(z0), z0, 2)
    assert ex.leading_order == 1
    assert list(ex.coefficients) == [1, 0]


@pytest.mark.parametrize("n", [2, 4, 6])
def test_log_derivative_of_pole_is_constant(n):
    z0 = CRat(Fraction(1, 4))
    w = RationalMap.linear(z0)
    f = w ** (-n)
    q = -(w * derivative(f) / f)
    ex = local_expansion(q, z0, 4)
    assert ex.leading_order == 0
    assert list(ex.coefficients) == [n, 0, 0, 0]


@settings(max_examples=40, deadline=None)
@given(rational_maps(), exact_points())
def test_local_expansion_matches_cauchy_integral(r, z0):
    # Laurent coefficients from a discrete Cauchy integral at radius 1e-3
    if r.is_zero():
        return
    near = [rt.approx for rt in roots(r.num) + roots(r.den) if abs(rt.approx - complex(z0)) > 1e-12]
    rho = 1e-3
    if near and min(abs(a - complex(z0)) for a in near) < 50 * rho:
        return
    ex = local_expansion(r, z0, 4)
    M = 64
    t = 2 * np.pi * np.arange(M) / M
    w = rho * np.exp(1j * t)
    vals = r.evaluate(complex(z0) + w)
    scale = max(abs(complex(c)) for c in ex.coefficients) or 1.0
    for k in range(4):
        power = ex.leading_order + k
        num = np.mean(vals * w ** (-power))
        assert abs(num - complex(ex.coefficients[k])) <= 1e-6 * scale


# --- antiderivative / derivative -----------------------------------------
def test_antiderivative_of_cylinder_f():
    assert antiderivative(RationalMap.const(1), 0) == z


def test_antiderivative_of_dressed_reciprocal():
    z0 = Fraction(1, 4)
    f = (z0 / (z0 - z)) ** 2
    expect = (z**3 - 3 * z0 * z**2 + 3 * z0**2 * z) / (3 * z0**2)
    assert antiderivative(f.inverse(), 0) == expect


def test_antiderivative_log_obstruction():
    with pytest.raises(LogarithmicObstruction) as info:
        antiderivative(R("1/(z-1)"), 0)
    assert info.value.pole == 1
    assert info.value.residue == 1


def test_derivative_examples():
    assert derivative(R("z^2")) == R("2*z")
    assert derivative(R("1/z")) == R("-1/z^2")
    assert derivative(RationalMap.const(CRat(3, 2))).is_zero()


@settings(max_examples=60, deadline=None)
@given(rational_maps())
def test_derivative_antiderivative_roundtrip(r):
    try:
        F = antiderivative(derivative(r), 0)
    except ValueError:
        return  # base point is a pole of r
    assert derivative(F) == derivative(r)
    assert (F - r).is_constant()


@settings(max_examples=60, deadline=None)
@given(rational_maps())
def test_derivatives_have_no_residues(r):
    d = derivative(r)
    if d.is_zero():
        return
    for rt in roots(r.den):
        if rt.exact is not None:
            assert residue(d, rt.exact) == 0


@settings(max_examples=60, deadline=None)
@given(rational_maps(), rational_maps())
def test_field_operations_are_exact(a, b):
    assert (a + b) - b == a
    if not b.is_zero():
        assert (a * b) / b == a


# --- text syntax ----------------------------------------------------------
@settings(max_examples=60, deadline=None)
@given(rational_maps())
def test_format_parse_roundtrip(r):
    assert parse_rational(format_rational(r)) == r


def test_parse_complex_and_negative_powers():
    assert R("(z-1/2)^-6") == RationalMap.linear(Fraction(1, 2)) ** -6
    assert R("(1+2i)*z") == RationalMap((0, CRat(1, 2)))
    assert parse_crat("-3/4+i/2") == CRat(Fraction(-3, 4), Fraction(1, 2))


@pytest.mark.parametrize("text", ["z^", "sin(z)", "z^(1/2)", "", "1/0"])
def test_parse_errors(text):
    with pytest.raises((ParseError, ZeroDivisionError)):
        parse_rational(text)


def test_potential_file():
    parts = parse_potential_text("# sixth-order pole\nf = (z-1/2)^-6\nE = z - 1/2  # simple zero\n")
    assert parts["E"] == RationalMap.linear(Fraction(1, 2))
    with pytest.raises(ParseError, match="line 2"):
        parse_potential_text("f = 1\ng = 2\n")
    with pytest.raises(ParseError, match="missing"):
        parse_potential_text("f = 1\n")


def test_numeric_view_is_accurate_near_multiple_pole():
    f = R("(z-1/2)^-6")
    zs = 0.5 + np.array([1e-3, 1e-2j, 0.3])
    expect = (zs - 0.5) ** -6
    assert np.allclose(f.numeric()(zs), expect, rtol=1e-13, atol=0)
