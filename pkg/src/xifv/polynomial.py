"""Univariate polynomials and rational functions over the rationals.

Coefficients are :class:`fractions.Fraction` stored lowest degree first.
A :class:`RationalFunction` is always kept in canonical form: numerator and
denominator coprime, denominator monic.  Equality is therefore exact
structural equality.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        if not math.isfinite(c):
            raise ValueError(f"non-finite coefficient {c!r}")
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


class Polynomial:
    """Dense univariate polynomial with exact rational coefficients."""

    __slots__ = ("coeffs", "symbol")

    def __init__(self, coeffs: Iterable = (), symbol: str = "x"):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)
        self.symbol = symbol

    @classmethod
    def var(cls, symbol: str = "x") -> "Polynomial":
        return cls([0, 1], symbol)

    @classmethod
    def const(cls, c, symbol: str = "x") -> "Polynomial":
        return cls([c], symbol)

    @classmethod
    def from_roots(cls, roots: Sequence, symbol: str = "x") -> "Polynomial":
        p = cls([1], symbol)
        for r in roots:
            p = p * cls([-_frac(r), 1], symbol)
        return p

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_const(self) -> bool:
        return len(self.coeffs) <= 1

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.symbol != self.symbol and not (other.is_const() or self.is_const()):
                raise ValueError(f"symbol mismatch: {self.symbol!r} vs {other.symbol!r}")
            return other
        return Polynomial([_frac(other)], self.symbol)

    def _sym(self, other: "Polynomial") -> str:
        return self.symbol if not self.is_const() else other.symbol

    def __add__(self, other):
        other = self._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Polynomial([x + y for x, y in zip(a, b)], self._sym(other))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs], self.symbol)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if self.is_zero() or other.is_zero():
            return Polynomial([], self._sym(other))
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(out, self._sym(other))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = Polynomial([1], self.symbol)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def divmod(self, other) -> tuple["Polynomial", "Polynomial"]:
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        sym = self._sym(other)
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Polynomial([], sym), Polynomial(rem, sym)
        quot = [Fraction(0)] * (dq + 1)
        lead = other.lead
        for i in range(dq, -1, -1):
            c = rem[i + len(other.coeffs) - 1] / lead
            quot[i] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[i + j] -= c * b
        return Polynomial(quot, sym), Polynomial(rem[: len(other.coeffs) - 1], sym)

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.coeffs == other.coeffs and (self.is_const() or self.symbol == other.symbol)
        if isinstance(other, (int, Fraction)):
            return self.coeffs == Polynomial([other]).coeffs
        return NotImplemented

    def __hash__(self):
        return hash((self.coeffs, self.symbol if not self.is_const() else None))

    def monic(self) -> "Polynomial":
        if self.is_zero():
            return self
        return Polynomial([c / self.lead for c in self.coeffs], self.symbol)

    def __call__(self, x):
        """Horner evaluation; exact for rational x, float for float x."""
        acc = 0 if not isinstance(x, float) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + (c if not isinstance(x, float) else float(c))
        return acc

    def derivative(self) -> "Polynomial":
        return Polynomial([i * c for i, c in enumerate(self.coeffs)][1:], self.symbol)

    def content(self) -> Fraction:
        """Positive rational c such that self / c has coprime integer coefficients."""
        if self.is_zero():
            return Fraction(0)
        den = math.lcm(*(c.denominator for c in self.coeffs))
        num = math.gcd(*(int(c * den) for c in self.coeffs))
        return Fraction(num, den)

    def integer_coeffs(self) -> list[int]:
        """Primitive integer coefficient list (sign of the leading coefficient kept)."""
        c = self.content()
        return [int(x / c) for x in self.coeffs]

    def __repr__(self):
        return f"Polynomial({[str(c) for c in self.coeffs]}, {self.symbol!r})"

    def __str__(self):
        if self.is_zero():
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mono = "" if i == 0 else (self.symbol if i == 1 else f"{self.symbol}^{i}")
            if mono and abs(c) == 1:
                coef = "-" if c < 0 else ""
            else:
                coef = str(c) + ("*" if mono else "")
            terms.append(coef + mono)
        return " + ".join(terms).replace("+ -", "- ")


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Monic greatest common divisor (Euclid over Q)."""
    while not b.is_zero():
        # monic remainders curb coefficient growth
        a, b = b, (a % b).monic()
    return a.monic()


def square_free(p: Polynomial) -> Polynomial:
    g = poly_gcd(p, p.derivative())
    return p // g if g.degree > 0 else p


def sturm_sequence(p: Polynomial) -> list[Polynomial]:
    seq = [p, p.derivative()]
    while not seq[-1].is_zero():
        r = seq[-2] % seq[-1]
        if r.is_zero():
            break
        # scale by a positive constant to curb coefficient growth
        seq.append(-r * (1 / r.content()))
    return seq


def _sign_changes(values) -> int:
    signs = [v for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def _root_bound(p: Polynomial) -> Fraction:
    # Cauchy bound
    lead = abs(p.lead)
    return 1 + max((abs(c) / lead for c in p.coeffs[:-1]), default=Fraction(0))


def real_roots(p: Polynomial, lo=None, hi=None, *, tol=Fraction(1, 10**15)) -> list[Fraction]:
    """Distinct real roots of ``p`` in the open interval (lo, hi).

    Roots are isolated with a Sturm sequence and refined by exact bisection.
    Rational roots with a small denominator are returned exactly; the rest are
    rational approximations within ``tol``.
    """
    if p.is_zero():
        raise ValueError("the zero polynomial has every number as a root")
    q = square_free(p)
    if q.degree < 1:
        return []
    bound = _root_bound(q)
    lo = -bound if lo is None else _frac(lo)
    hi = bound if hi is None else _frac(hi)
    if lo >= hi:
        return []
    # strip roots sitting exactly on the endpoints: interval is open
    for end in (lo, hi):
        while q.degree >= 1 and q(end) == 0:
            q = q // Polynomial([-end, 1], q.symbol)
    if q.degree < 1:
        return []
    seq = sturm_sequence(q)

    def count(a, b):
        return _sign_changes([s(a) for s in seq]) - _sign_changes([s(b) for s in seq])

    roots: list[Fraction] = []
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        k = count(a, b)
        if k == 0:
            continue
        if k == 1:
            roots.append(_refine(q, a, b, tol))
            continue
        # split at a non-root so Sturm counts stay valid on both halves
        for frac in (Fraction(1, 2), Fraction(1, 3), Fraction(2, 5), Fraction(3, 7), Fraction(5, 11)):
            mid = a + (b - a) * frac
            if q(mid) != 0:
                break
        stack.append((a, mid))
        stack.append((mid, b))
    return sorted(set(roots))


def _refine(q: Polynomial, a: Fraction, b: Fraction, tol: Fraction) -> Fraction:
    fa = q(a)
    if fa == 0:
        return a
    while b - a > tol:
        m = (a + b) / 2
        # try a nearby simple rational before continuing bisection
        simple = m.limit_denominator(1000)
        if a < simple < b and q(simple) == 0:
            return simple
        fm = q(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    m = (a + b) / 2
    simple = m.limit_denominator(1000)
    return simple if q(simple) == 0 else m


class RationalFunction:
    """Quotient of two polynomials in one symbol, kept in lowest terms."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, symbol: str | None = None):
        if not isinstance(num, Polynomial):
            num = Polynomial([num], symbol or "x")
        if den is None:
            den = Polynomial([1], num.symbol)
        elif not isinstance(den, Polynomial):
            den = Polynomial([den], num.symbol)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        sym = symbol or (num.symbol if not num.is_const() else den.symbol)
        if not num.is_const() and not den.is_const() and num.symbol != den.symbol:
            raise ValueError("numerator and denominator in different symbols")
        if num.is_zero():
            num, den = Polynomial([], sym), Polynomial([1], sym)
        else:
            g = poly_gcd(num, den)
            if g.degree > 0:
                num, den = num // g, den // g
            lead = den.lead
            num = Polynomial([c / lead for c in num.coeffs], sym)
            den = Polynomial([c / lead for c in den.coeffs], sym)
        self.num = num
        self.den = den

    @classmethod
    def var(cls, symbol: str) -> "RationalFunction":
        return cls(Polynomial.var(symbol))

    @property
    def symbol(self) -> str:
        return self.num.symbol

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _coerce(self, other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            if not (self.is_const() or other.is_const()) and other.symbol != self.symbol:
                raise ValueError(f"symbol mismatch: {self.symbol!r} vs {other.symbol!r}")
            return other
        if isinstance(other, Polynomial):
            return RationalFunction(other)
        return RationalFunction(Polynomial([_frac(other)], self.symbol))

    def _sym(self, other: "RationalFunction") -> str:
        return self.symbol if not self.is_const() else other.symbol

    def __add__(self, other):
        other = self._coerce(other)
        sym = self._sym(other)
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den, sym)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den, sym)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den, self.symbol)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        return RationalFunction(self.num * other.num, self.den * other.den, self._sym(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num, self._sym(other))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return RationalFunction(self.den ** (-k), self.num ** (-k), self.symbol)
        return RationalFunction(self.num**k, self.den**k, self.symbol)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Polynomial)):
            other = self._coerce(other)
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __call__(self, x):
        d = self.den(x)
        if d == 0:
            raise ZeroDivisionError(f"denominator vanishes at {self.symbol}={x}")
        return self.num(x) / d

    def evaluate(self, x):
        return self(x)

    def constant(self) -> Fraction:
        if not self.is_const():
            raise ValueError(f"{self} is not constant")
        return self.num.lead if not self.num.is_zero() else Fraction(0)

    def ratio_constant(self, other: "RationalFunction") -> Fraction | None:
        """The constant c with self == c * other, or None if none exists."""
        q = self / self._coerce(other)
        return q.constant() if q.is_const() else None

    def __float__(self):
        return float(self.constant())

    def __repr__(self):
        return f"RationalFunction(({self.num}) / ({self.den}))"

    def __str__(self):
        if self.den == 1:
            return str(self.num)
        return f"({self.num}) / ({self.den})"

    def to_dict(self) -> dict:
        """Integer-coefficient form: value = scale * num / den, low degree first."""
        cn, cd = self.num.content(), self.den.content()
        return {
            "symbol": self.symbol,
            "scale": str(cn / cd) if not self.num.is_zero() else "0",
            "numerator": self.num.integer_coeffs() if not self.num.is_zero() else [],
            "denominator": self.den.integer_coeffs(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RationalFunction":
        sym = d["symbol"]
        return cls(Polynomial(d["numerator"], sym), Polynomial(d["denominator"], sym), sym) * Fraction(d["scale"])


def as_exact(value):
    """Turn an int/Fraction/constant RationalFunction into a Fraction when possible."""
    if isinstance(value, RationalFunction) and value.is_const():
        return value.constant()
    if isinstance(value, int):
        return Fraction(value)
    return value
