from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bsverify.ratfunc import (
    LAM, N, NU, ONE, P, ZERO, InvalidInput, LinSystem, Poly, RationalFunction,
    check_solution, double_factorial, in_solution_space, pochhammer, render, rf,
    rf_eq, solve_linear, substitute,
)


def test_linear_arithmetic():
    assert (LAM + 1) + (LAM - 1) == 2 * LAM
    assert (LAM - P) * (LAM - N + P) == LAM ** 2 - N * LAM + P * N - P ** 2
    assert ((NU - LAM + 1) * 0).is_zero()


def test_equality_cancels_common_factors():
    assert rf_eq((LAM ** 2 - 1) / (LAM - 1), LAM + 1)
    assert not rf_eq(LAM + NU - N, LAM + NU - N + 1)
    assert rf_eq(2 * ((LAM + NU + 1) / 2) - N - 2, LAM + NU - 1 - N)


def test_substitution():
    assert substitute(2 * LAM - N - 2, {"lam": (LAM + NU + 1) / 2}) == LAM + NU - 1 - N
    assert substitute(2 * LAM - N + 3, {"lam": LAM}) == 2 * LAM - N + 3
    # at the tangential special point the ∂_n² coefficient of the order-2 family dies
    assert substitute(2 * LAM - N + 3, {"lam": (N - 1) / 2 - 1}) == ZERO
    assert substitute(2 * LAM - N + 3, {"lam": -(N - 1) / 2 + 1}) == 6 - 2 * N


def test_pochhammer():
    assert pochhammer(LAM, 0) == ONE
    assert pochhammer(rf(1), 4) == rf(24)
    assert pochhammer(LAM - N / 2 - 2, 1) == LAM - N / 2 - 2
    assert pochhammer(LAM, 3) == LAM * (LAM + 1) * (LAM + 2)


def test_double_factorial():
    assert [double_factorial(m) for m in (-1, 0, 1, 5, 6)] == [1, 1, 1, 15, 48]


def test_evaluate_and_float_pair():
    f = (LAM + N) / (NU - 1)
    assert f.evaluate({"lam": 1, "nu": 2, "n": 3}) == Fraction(4)
    num, den = f.float_pair()
    vals = [1.0, 2.0, 3.0] + [0.0] * 6
    assert num(vals) == 4.0 and den(vals) == 1.0
    with pytest.raises(ZeroDivisionError):
        f.evaluate({"lam": 0, "nu": 1, "n": 3})
    with pytest.raises(InvalidInput):
        f.evaluate({"lam": 0})


def test_render_is_canonical():
    a = (LAM - P) * (LAM - N + P)
    b = LAM ** 2 - N * LAM + P * N - P ** 2
    assert render(a) == render(b)
    assert render(ZERO) == "0"
    assert "\\lambda n" in render(LAM * N, latex=True)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        LAM / ZERO


def test_linear_solve_unique():
    # A + B = n - 2λ + 1, B = 1
    system = LinSystem([([ONE, ONE], N - 2 * LAM + 1), ([ZERO, ONE], ONE)], ["u1", "u2"])
    sol = solve_linear(system)
    assert sol.unique and sol.particular == [N - 2 * LAM, ONE]
    assert check_solution(system, sol.particular)


def test_linear_solve_identity_and_nullspace():
    sol = solve_linear(LinSystem([([ONE], rf(5))], ["u1"]))
    assert sol.particular == [rf(5)]
    sol = solve_linear(LinSystem([([ONE, LAM], NU)], ["u1", "u2"]))
    assert sol.nullity == 1
    assert in_solution_space(sol, [NU - LAM * 3, rf(3)])
    assert not in_solution_space(sol, [NU, ONE])


def test_inconsistent_system():
    sol = solve_linear(LinSystem([([ONE], ONE), ([ONE], rf(2))], ["u1"]))
    assert not sol.consistent


# -- properties ----------------------------------------------------------

_SYMS = [LAM, NU, N, P]


@st.composite
def polys(draw, max_terms=3):
    total = ZERO
    for _ in range(draw(st.integers(1, max_terms))):
        c = Fraction(draw(st.integers(-4, 4)), draw(st.integers(1, 3)))
        mono = ONE
        for s in _SYMS:
            mono = mono * s ** draw(st.integers(0, 2))
        total = total + c * mono
    return total


@st.composite
def ratfuncs(draw):
    den = draw(polys())
    if den.is_zero():
        den = ONE
    return draw(polys()) / den


@settings(max_examples=40, deadline=None)
@given(ratfuncs(), ratfuncs(), ratfuncs())
def test_field_axioms(a, b, c):
    assert (a + b) - b == a
    assert a * (b + c) == a * b + a * c
    if not b.is_zero():
        assert (a * b) / b == a


@settings(max_examples=40, deadline=None)
@given(ratfuncs(), ratfuncs())
def test_render_agrees_with_equality(a, b):
    assert (render(a) == render(b)) == (a == b)


@settings(max_examples=30, deadline=None)
@given(polys(), st.integers(-5, 5), st.integers(1, 4))
def test_substitute_then_evaluate(f, k, q):
    x = Fraction(k, q)
    g = substitute(f, {"lam": rf(x)})
    point = {"lam": x, "nu": Fraction(1, 3), "n": 5, "p": 2}
    assert g.evaluate(point) == f.evaluate(point)


def test_poly_constant_view():
    assert Poly.const(Fraction(3, 2)).constant_value() == Fraction(3, 2)
    assert isinstance(rf(2), RationalFunction)
