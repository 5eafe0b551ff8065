from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from xifv.polynomial import (Polynomial, RationalFunction, poly_gcd, real_roots, square_free,
                             sturm_sequence)

from conftest import poly_to_sympy, to_sympy

X = sp.Symbol("x")
small = st.integers(min_value=-6, max_value=6)
coeffs = st.lists(small, min_size=1, max_size=5)


def P(*cs):
    return Polynomial(cs)


@given(coeffs, coeffs)
@settings(max_examples=60, deadline=None)
def test_arithmetic_matches_sympy(a, b):
    p, q = Polynomial(a), Polynomial(b)
    sa, sb = poly_to_sympy(p, X), poly_to_sympy(q, X)
    assert sp.expand(poly_to_sympy(p + q, X) - (sa + sb)) == 0
    assert sp.expand(poly_to_sympy(p * q, X) - sa * sb) == 0
    assert sp.expand(poly_to_sympy(p - q, X) - (sa - sb)) == 0


@given(coeffs, coeffs)
@settings(max_examples=60, deadline=None)
def test_divmod_identity(a, b):
    p, q = Polynomial(a), Polynomial(b)
    if q.is_zero():
        with pytest.raises(ZeroDivisionError):
            p.divmod(q)
        return
    quo, rem = p.divmod(q)
    assert quo * q + rem == p
    assert rem.degree < q.degree


def test_gcd_and_square_free():
    p = Polynomial.from_roots([1, 1, 2, Fraction(1, 3)])
    q = Polynomial.from_roots([1, 5])
    assert poly_gcd(p, q) == Polynomial.from_roots([1])
    assert square_free(p) == Polynomial.from_roots([1, 2, Fraction(1, 3)])


def test_evaluation_and_derivative():
    p = P(1, -3, 0, 2)
    assert p(Fraction(1, 2)) == Fraction(1) - Fraction(3, 2) + Fraction(1, 4)
    assert p.derivative() == P(-3, 0, 6)
    assert isinstance(p(0.5), float)


def test_real_roots_exact_and_interval():
    p = Polynomial.from_roots([-2, 0, Fraction(1, 2), 3])
    assert real_roots(p) == [-2, 0, Fraction(1, 2), 3]
    # open interval: endpoints excluded
    assert real_roots(p, Fraction(0), Fraction(3)) == [Fraction(1, 2)]
    assert real_roots(P(1, 0, 1)) == []


def test_real_roots_irrational():
    roots = real_roots(P(-2, 0, 1))
    assert len(roots) == 2
    assert abs(float(roots[1]) - 2**0.5) < 1e-12


def test_sturm_counts_distinct_roots():
    seq = sturm_sequence(Polynomial.from_roots([1, 2, 3]))
    assert seq[0].degree == 3 and seq[-1].is_const()


def test_rational_function_canonical_form():
    x = RationalFunction.var("x")
    r = (x * x - 1) / (2 * x - 2)
    assert r.den.lead == 1
    assert r == (x + 1) / 2
    assert r(Fraction(3)) == 2
    with pytest.raises(ZeroDivisionError):
        RationalFunction(Polynomial([1], "x"), Polynomial([], "x"))


@given(coeffs, coeffs.filter(lambda c: any(c)), coeffs, coeffs.filter(lambda c: any(c)))
@settings(max_examples=40, deadline=None)
def test_rational_arithmetic_matches_sympy(a, b, c, d):
    r = RationalFunction(Polynomial(a), Polynomial(b))
    s = RationalFunction(Polynomial(c), Polynomial(d))
    for ours, theirs in [(r + s, to_sympy(r, X) + to_sympy(s, X)),
                         (r * s, to_sympy(r, X) * to_sympy(s, X))]:
        assert sp.simplify(to_sympy(ours, X) - theirs) == 0


def test_ratio_constant_and_round_trip():
    x = RationalFunction.var("b")
    r = (x - 2) / (x * x + 3)
    assert (3 * r).ratio_constant(r) == 3
    assert (x * r).ratio_constant(r) is None
    assert RationalFunction.from_dict(r.to_dict()) == r
