import sympy as sp

from xifv.polynomial import Polynomial, RationalFunction


def poly_to_sympy(p: Polynomial, x):
    return sum(sp.Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(p.coeffs))


def to_sympy(rf, x):
    """RationalFunction -> sympy expression in x."""
    if not isinstance(rf, RationalFunction):
        return sp.Rational(rf.numerator, rf.denominator) if hasattr(rf, "numerator") else sp.nsimplify(rf)
    return poly_to_sympy(rf.num, x) / poly_to_sympy(rf.den, x)


def ratio_is_constant(expr, target, x):
    """Return the constant c with expr = c * target, or None."""
    c = sp.cancel(sp.together(expr / target))
    return c if not c.has(x) else None
