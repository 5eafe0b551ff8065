"""Resampling measures of the Xi-coalescent and their collision rates.

A measure is ``Xi = Xi_0 + sigma2 * delta_0``.  The catalog covers

* ``kingman``  -- no multiple-collision part, only ``sigma2``;
* ``beta``     -- Lambda(dx) = x^(1-b) (1-x)^(b-1) dx / B(2-b, b), b in (0, 2);
* ``powerlaw`` -- Lambda(dx) = x^(-g) dx, g in (0, 1);
* ``delta1``   -- Lambda = point mass at 1;
* ``density``  -- arbitrary Lambda density on [0, 1] (quadrature only);
* ``atoms``    -- finitely many weighted points of the infinite simplex;
* ``pd``       -- Poisson-Dirichlet(eps) on the simplex, closed-form rates.

Rates can be computed as floats (``numeric``), exact fractions (``exact``) or
rational functions of the family parameter (``symbolic``).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import integrate, special

from .polynomial import RationalFunction

MODES = ("numeric", "exact", "symbolic")
LAMBDA_FAMILIES = ("beta", "powerlaw", "delta1", "density")
FAMILIES = ("kingman",) + LAMBDA_FAMILIES + ("atoms", "pd")
SYMBOLS = {"beta": "beta", "powerlaw": "gamma", "pd": "epsilon"}


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class InconsistentRatesError(ValueError):
    """A rate table violates nonnegativity after the consistency fill-in."""


@dataclass(frozen=True, order=True)
class CollisionSignature:
    """A (b; k1 >= ... >= kr; s) collision: r groups merge, s blocks untouched."""

    b: int
    ks: tuple[int, ...]
    s: int

    def __post_init__(self):
        ks = tuple(int(k) for k in self.ks)
        object.__setattr__(self, "ks", ks)
        if not ks:
            raise ValueError("a collision needs at least one merging group")
        if any(k < 2 for k in ks):
            raise ValueError(f"group sizes must be >= 2, got {ks}")
        if list(ks) != sorted(ks, reverse=True):
            raise ValueError(f"group sizes must be nonincreasing, got {ks}")
        if self.s < 0:
            raise ValueError("s must be nonnegative")
        if self.b != self.s + sum(ks):
            raise ValueError(f"b={self.b} != s + sum(ks) = {self.s + sum(ks)}")

    @classmethod
    def of(cls, ks: Sequence[int], s: int) -> "CollisionSignature":
        ks = tuple(sorted(ks, reverse=True))
        return cls(sum(ks) + s, ks, s)

    @classmethod
    def parse(cls, text: str) -> "CollisionSignature":
        """Parse ``"(b;k1,k2;s)"``."""
        b, ks, s = text.strip().strip("()").split(";")
        return cls(int(b), tuple(int(k) for k in ks.split(",")), int(s))

    @property
    def r(self) -> int:
        return len(self.ks)

    def __str__(self):
        return f"({self.b};{','.join(map(str, self.ks))};{self.s})"


def signatures(b: int) -> Iterator[CollisionSignature]:
    """All collision signatures merging exactly b blocks."""
    for s in range(b - 1):
        for ks in _parts_ge2(b - s, b - s):
            yield CollisionSignature(b, ks, s)


def _parts_ge2(n: int, largest: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 1, -1):
        for rest in _parts_ge2(n - k, k):
            yield (k,) + rest


# Rate naming: a_{k1 k2 ... 1...1}; trailing ones are untouched blocks.
RATE_NAMES = (
    "2", "3", "21", "4", "31", "22", "211", "5", "41", "32", "311", "221",
    "2111", "6", "51", "42", "33", "411", "321", "222", "3111", "2211", "21111",
)
BASE_NAMES = ("2", "3", "4", "5", "6", "211", "2111", "21111", "33", "42")


def name_to_signature(name: str) -> CollisionSignature:
    digits = [int(c) for c in name]
    ks = [d for d in digits if d >= 2]
    return CollisionSignature.of(ks, digits.count(1))


def signature_to_name(sig: CollisionSignature) -> str:
    return "".join(map(str, sig.ks)) + "1" * sig.s


@dataclass(frozen=True)
class XiMeasure:
    """A resampling measure ``Xi_0 + sigma2 * delta_0``.

    ``param`` is the family parameter (beta, gamma or epsilon); for symbolic
    work it may be a :class:`RationalFunction`.  ``truncation`` restricts
    Xi_0 to ``{sum z_i^2 > truncation}`` and makes the jump rate finite.
    """

    family: str = "kingman"
    sigma2: float | Fraction = 0
    param: object = None
    density: Callable[[float], float] | None = field(default=None, compare=False)
    atoms: tuple[tuple[object, tuple[object, ...]], ...] = ()
    truncation: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        p = self.param
        numeric_p = p is not None and not isinstance(p, RationalFunction)
        if self.family == "beta" and numeric_p and not 0 < p < 2:
            raise ValueError("Beta(2-b, b) requires b in (0, 2)")
        if self.family == "powerlaw" and numeric_p and not 0 < p < 1:
            raise ValueError("x^(-g) dx requires g in (0, 1)")
        if self.family == "pd" and numeric_p and not p > 0:
            raise ValueError("Poisson-Dirichlet requires eps > 0")
        if self.family in ("beta", "powerlaw", "pd") and p is None:
            raise ValueError(f"family {self.family!r} needs a parameter")
        if self.family == "density" and self.density is None:
            raise ValueError("family 'density' needs a density callable")
        if self.family == "atoms":
            if not self.atoms:
                raise ValueError("family 'atoms' needs at least one atom")
            clean = []
            for w, x in self.atoms:
                x = tuple(c for c in x if c != 0)
                if w <= 0:
                    raise ValueError("atom weights must be positive")
                if not x:
                    raise ValueError("Xi_0 has no atom at 0; use sigma2 instead")
                if any(c < 0 for c in x) or list(x) != sorted(x, reverse=True):
                    raise ValueError(f"simplex point must be nonincreasing and >= 0: {x}")
                if sum(x) > 1 + 1e-15:
                    raise ValueError(f"simplex point sums to more than 1: {x}")
                clean.append((w, x))
            object.__setattr__(self, "atoms", tuple(clean))
        if self.family == "kingman" and self.sigma2 == 0:
            raise ValueError("the zero measure does not define a coalescent")
        if self.truncation is not None and not 0 < self.truncation < 1:
            raise ValueError("truncation level must lie in (0, 1)")

    # constructors -----------------------------------------------------
    @classmethod
    def kingman(cls, sigma2=1) -> "XiMeasure":
        return cls("kingman", sigma2)

    @classmethod
    def beta(cls, b=None, sigma2=0, truncation=None) -> "XiMeasure":
        return cls("beta", sigma2, b if b is not None else RationalFunction.var("beta"), truncation=truncation)

    @classmethod
    def power_law(cls, g=None, sigma2=0, truncation=None) -> "XiMeasure":
        return cls("powerlaw", sigma2, g if g is not None else RationalFunction.var("gamma"), truncation=truncation)

    @classmethod
    def delta1(cls, sigma2=0) -> "XiMeasure":
        return cls("delta1", sigma2)

    @classmethod
    def lambda_density(cls, density, sigma2=0, truncation=None) -> "XiMeasure":
        return cls("density", sigma2, density=density, truncation=truncation)

    @classmethod
    def simplex_atoms(cls, atoms, sigma2=0) -> "XiMeasure":
        return cls("atoms", sigma2, atoms=tuple((w, tuple(x)) for w, x in atoms))

    @classmethod
    def poisson_dirichlet(cls, eps=None, sigma2=0) -> "XiMeasure":
        return cls("pd", sigma2, eps if eps is not None else RationalFunction.var("epsilon"))

    # -----------------------------------------------------------------
    @property
    def is_lambda(self) -> bool:
        """True when Xi_0 lives on [0, 1] (at most one merger at a time)."""
        if self.family in LAMBDA_FAMILIES or self.family == "kingman":
            return True
        return self.family == "atoms" and all(len(x) == 1 for _, x in self.atoms)

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.param, RationalFunction)

    @property
    def symbol(self) -> str | None:
        return SYMBOLS.get(self.family)

    def with_param(self, value) -> "XiMeasure":
        return XiMeasure(self.family, self.sigma2, value, self.density, self.atoms, self.truncation)

    def with_truncation(self, eps: float | None) -> "XiMeasure":
        return XiMeasure(self.family, self.sigma2, self.param, self.density, self.atoms, eps)

    def describe(self) -> dict:
        d = {"family": self.family, "sigma2": _jsonable(self.sigma2)}
        if self.param is not None:
            d["param"] = _jsonable(self.param)
        if self.atoms:
            d["atoms"] = [[_jsonable(w), [_jsonable(c) for c in x]] for w, x in self.atoms]
        if self.truncation is not None:
            d["truncation"] = self.truncation
        return d


def _jsonable(v):
    if isinstance(v, RationalFunction):
        return str(v)
    if isinstance(v, Fraction):
        return float(v) if v.denominator != 1 else int(v)
    return v


# ---------------------------------------------------------------------
# parameter handling per mode


def _param(m: XiMeasure, mode: str):
    p = m.param
    if mode == "symbolic":
        if isinstance(p, RationalFunction):
            return p
        return RationalFunction.var(m.symbol) if m.symbol else p
    if isinstance(p, RationalFunction):
        raise ValueError("measure has a symbolic parameter; use mode='symbolic'")
    if mode == "exact":
        return Fraction(p) if p is not None else None
    return float(p) if p is not None else None


def _num(v, mode):
    if mode == "numeric":
        return float(v)
    return Fraction(v) if not isinstance(v, (Fraction, RationalFunction)) else v


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


def _exactable(m: XiMeasure) -> bool:
    return m.family not in ("density",) and m.truncation is None


# ---------------------------------------------------------------------
# raw moments  M_n = int_0^1 x^n Xi_0(dx)


def raw_moment(m: XiMeasure, n: int, mode: str = "exact"):
    """n-th raw moment of the Lambda part of the measure (sigma2 excluded)."""
    _check_mode(mode)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not m.is_lambda:
        raise ValueError(f"raw moments need a measure on [0, 1], got family {m.family!r}")
    if mode != "numeric" and not _exactable(m):
        raise ValueError("density and truncated measures only support numeric moments")
    fam = m.family
    if fam == "kingman":
        return _num(0, mode)
    if fam == "delta1":
        return _num(1, mode)
    if fam == "atoms":
        total = sum(w * x[0] ** n for w, x in m.atoms)
        return float(total) if mode == "numeric" else Fraction(total)
    if m.truncation is not None or fam == "density":
        return _quad_moment(m, n)
    p = _param(m, mode)
    if fam == "beta":
        if mode == "numeric":
            # Gamma(n+2-b) / ((n+1)! Gamma(2-b))
            return math.exp(special.gammaln(n + 2 - p) - special.gammaln(n + 2) - special.gammaln(2 - p))
        acc = _num(1, mode)
        for j in range(n):
            acc = acc * (2 - p + j)
        return acc / math.factorial(n + 1)
    if fam == "powerlaw":
        return 1 / (n + 1 - p)
    raise AssertionError(fam)


# ---------------------------------------------------------------------
# quadrature


QUAD_TOL = 1e-12


def _lambda_weight(m: XiMeasure):
    """(integrand factor, alg-weight exponents, normalization) for quad."""
    if m.family == "beta":
        b = float(m.param)
        norm = math.exp(-special.betaln(2 - b, b))
        return (1 - b, b - 1), norm
    if m.family == "powerlaw":
        return (-float(m.param), 0.0), 1.0
    return None, 1.0


def _quad(fn: Callable[[float], float], m: XiMeasure, tol: float = QUAD_TOL,
          lower: float | None = None, upper: float = 1.0) -> float:
    """Integrate fn against the Lambda part of m over (lower, upper].

    ``lower`` defaults to the truncation point sqrt(truncation), else 0.
    QUADPACK warnings are silenced; the error estimate is checked instead.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _quad_inner(fn, m, tol, lower, upper)


def _quad_inner(fn, m, tol, lower, upper):
    if lower is None:
        lower = math.sqrt(m.truncation) if m.truncation is not None else 0.0
    wvar, norm = _lambda_weight(m)
    if m.family == "delta1":
        val, err = (fn(1.0) if lower < 1.0 <= upper else 0.0), 0.0
    elif wvar is not None:
        a, b = wvar
        if lower == 0.0 and upper == 1.0:
            val, err = integrate.quad(fn, 0.0, 1.0, weight="alg", wvar=(a, b), epsabs=tol, epsrel=tol, limit=200)
        elif upper == 1.0:
            val, err = integrate.quad(lambda x: fn(x) * x**a, lower, 1.0,
                                      weight="alg", wvar=(0.0, b), epsabs=tol, epsrel=tol, limit=200)
        else:
            val, err = integrate.quad(lambda x: fn(x) * x**a * (1 - x) ** b, lower, upper,
                                      epsabs=tol, epsrel=tol, limit=200)
        val, err = val * norm, err * norm
    elif m.family == "density":
        mid = (lower + upper) / 2
        v1, e1 = integrate.quad(lambda x: fn(x) * m.density(x), lower, mid, epsabs=tol, epsrel=tol, limit=200)
        v2, e2 = integrate.quad(lambda x: fn(x) * m.density(x), mid, upper, epsabs=tol, epsrel=tol, limit=200)
        val, err = v1 + v2, e1 + e2
    else:
        raise ValueError(f"no quadrature rule for family {m.family!r}")
    if err > max(tol, 1e-8 * abs(val)) * 10:
        raise QuadratureError(f"quadrature error estimate {err:.3g} above tolerance {tol:.3g}", err)
    return val


def _quad_moment(m: XiMeasure, n: int) -> float:
    return _quad(lambda x: x**n, m)


# ---------------------------------------------------------------------
# collision rates


def lambda_rate(m: XiMeasure, sig: CollisionSignature, mode: str = "numeric", method: str = "auto"):
    """Rate of one particular (b; ks; s)-collision among b blocks.

    ``method='quad'`` forces adaptive quadrature for Lambda densities (used as
    an independent check on the closed forms).
    """
    _check_mode(mode)
    kingman = m.sigma2 if (sig.r == 1 and sig.ks[0] == 2) else 0
    return _num(kingman, mode) + _beta_rate(m, sig, mode, method)


def _beta_rate(m: XiMeasure, sig: CollisionSignature, mode: str, method: str):
    fam = m.family
    if fam == "kingman":
        return _num(0, mode)
    if fam == "pd":
        return _pd_rate(_param(m, mode), sig, mode)
    if fam == "atoms" and not m.is_lambda:
        return _atoms_rate(m, sig, mode)
    if sig.r >= 2:
        return _num(0, mode)
    k, s = sig.ks[0], sig.s
    if fam == "delta1":
        return _num(1 if s == 0 else 0, mode)
    if fam == "atoms":
        total = sum(w * x[0] ** (k - 2) * (1 - x[0]) ** s for w, x in m.atoms)
        return float(total) if mode == "numeric" else Fraction(total)
    if mode != "numeric" or method == "moments":
        # binomial expansion of (1-x)^s against the raw moments
        acc = _num(0, mode)
        for j in range(s + 1):
            acc = acc + (-1) ** j * math.comb(s, j) * raw_moment(m, k - 2 + j, mode)
        return acc
    if method == "quad" or fam == "density" or m.truncation is not None:
        return _quad(lambda x: x ** (k - 2) * (1 - x) ** s, m)
    b = float(m.param)
    if fam == "beta":
        return math.exp(special.betaln(k - b, s + b) - special.betaln(2 - b, b))
    if fam == "powerlaw":
        return math.exp(special.betaln(k - 1 - b, s + 1))
    raise AssertionError(fam)


def _pd_rate(eps, sig: CollisionSignature, mode: str):
    num = eps ** (sig.r + sig.s)
    for k in sig.ks:
        num = num * math.factorial(k - 1)
    rising = _num(1, mode)
    for j in range(sig.b):
        rising = rising * (eps + j)
    return num / rising


def _atoms_rate(m: XiMeasure, sig: CollisionSignature, mode: str):
    """Direct finite summation of the simplex-rate integral over one atom list."""
    exact = mode != "numeric"
    total = Fraction(0) if exact else 0.0
    r, s = sig.r, sig.s
    for w, x in m.atoms:
        if exact:
            w, x = Fraction(w), tuple(Fraction(c) for c in x)
        else:
            w, x = float(w), tuple(float(c) for c in x)
        sq = sum(c * c for c in x)
        rest = 1 - sum(x)
        acc = 0
        for l in range(s + 1):
            if r + l > len(x):
                break
            inner = 0
            for idx in itertools.permutations(range(len(x)), r + l):
                term = 1
                for k, i in zip(sig.ks, idx[:r]):
                    term *= x[i] ** k
                for i in idx[r:]:
                    term *= x[i]
                inner += term
            acc += math.comb(s, l) * inner * rest ** (s - l)
        total += w * acc / sq
    return total


# ---------------------------------------------------------------------
# named rate tables


def _fill_consistency(a: dict) -> dict:
    """Complete a table from its base entries via the b <= 6 consistency relations."""
    F = Fraction
    a2, a3, a4, a5, a6 = a["2"], a["3"], a["4"], a["5"], a["6"]
    a211, a2111, a21111, a33, a42 = a["211"], a["2111"], a["21111"], a["33"], a["42"]
    out = dict(a)
    out["21"] = a2 - a3
    out["22"] = a2 - 2 * a3 + a4 - a211
    out["31"] = a3 - a4
    out["41"] = a4 - a5
    out["221"] = F(1, 5) * a2 - F(4, 5) * a3 + a4 + F(1, 5) * a211 - F(2, 5) * a2111 - F(2, 5) * a5
    out["311"] = F(3, 5) * a211 - F(2, 5) * a2 + F(8, 5) * a3 - 2 * a4 - F(1, 5) * a2111 + F(4, 5) * a5
    out["32"] = -F(3, 5) * a3 + F(1, 5) * a2111 + F(1, 5) * a5 - F(3, 5) * a211 + F(2, 5) * a2
    out["2211"] = (-F(14, 15) * a3 + a4 + F(2, 5) * a2 - F(4, 5) * a5 - F(2, 3) * a33 - a42
                   - F(3, 5) * a211 + F(8, 15) * a2111 - F(1, 3) * a21111 + F(1, 3) * a6)
    out["222"] = (2 * a211 - a2 + F(4, 3) * a3 + F(8, 3) * a33 + 3 * a42 - F(4, 3) * a2111
                  + F(1, 3) * a21111 - F(1, 3) * a6)
    out["3111"] = (-F(3, 5) * a2111 + F(14, 5) * a3 - 3 * a4 - F(6, 5) * a2 + F(12, 5) * a5
                   + 2 * a33 + 3 * a42 + F(9, 5) * a211 - a6)
    out["321"] = F(2, 5) * a2 - F(3, 5) * a3 + F(1, 5) * a5 - a33 - a42 - F(3, 5) * a211 + F(1, 5) * a2111
    out["411"] = a4 - 2 * a5 - a42 + a6
    out["51"] = a5 - a6
    return out


@dataclass(frozen=True)
class RateTable:
    """The 23 named rates a_2 ... a_21111.

    ``a_2`` and every single-pair entry (a_21, a_211, ...) include sigma2,
    so entries are total collision rates, never raw Xi_0 integrals.
    """

    entries: dict
    mode: str = "numeric"
    measure: dict | None = None

    def __getitem__(self, name: str):
        return self.entries[str(name)]

    def __iter__(self):
        return iter(RATE_NAMES)

    def items(self):
        return [(n, self.entries[n]) for n in RATE_NAMES]

    def signature(self, name: str) -> CollisionSignature:
        return name_to_signature(name)

    def evaluate(self, x) -> "RateTable":
        """Substitute a value for the symbolic parameter."""
        ent = {n: (v(x) if isinstance(v, RationalFunction) else v) for n, v in self.entries.items()}
        mode = "exact" if not isinstance(x, float) else "numeric"
        if mode == "numeric":
            ent = {n: float(v) for n, v in ent.items()}
        return RateTable(ent, mode, self.measure)

    def to_rows(self) -> list[tuple[str, str, str]]:
        rows = []
        for name in RATE_NAMES:
            v = self.entries[name]
            rows.append((f"a{name}", str(name_to_signature(name)), _fmt_value(v)))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "signature", "value"])
        w.writerows(self.to_rows())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "measure": self.measure,
            "rates": [{"name": n, "signature": s, "value": v} for n, s, v in self.to_rows()],
        }


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rate_table_from_json(d: dict) -> RateTable:
    ent = {}
    for row in d["rates"]:
        name = row["name"].lstrip("a")
        v = row["value"]
        ent[name] = float(v) if d["mode"] == "numeric" else Fraction(v)
    if d["mode"] == "symbolic":
        raise ValueError("symbolic tables are not round-tripped through JSON")
    return RateTable(ent, d["mode"], d.get("measure"))


def named_rates(m: XiMeasure, mode: str = "numeric", tol: float = 1e-12) -> RateTable:
    """Full table of the 23 named rates for measure ``m``."""
    _check_mode(mode)
    if mode == "symbolic" and m.symbol is None:
        mode_inner = "exact"
    else:
        mode_inner = mode
    if mode != "numeric" and not _exactable(m):
        raise ValueError("density and truncated measures only support numeric rate tables")
    base = {}
    s2 = _num(m.sigma2, mode_inner)
    if m.is_lambda and m.family != "atoms":
        M = [raw_moment(m, n, mode_inner) for n in range(5)]
        base["2"] = M[0] + s2
        base["3"], base["4"], base["5"], base["6"] = M[1], M[2], M[3], M[4]
        base["211"] = M[0] - 2 * M[1] + M[2] + s2
        base["2111"] = M[0] - 3 * M[1] + 3 * M[2] - M[3] + s2
        base["21111"] = M[0] - 4 * M[1] + 6 * M[2] - 4 * M[3] + M[4] + s2
        base["33"] = _num(0, mode_inner)
        base["42"] = _num(0, mode_inner)
    else:
        for name in BASE_NAMES:
            base[name] = lambda_rate(m, name_to_signature(name), mode_inner)
    table = _fill_consistency(base)
    if mode_inner == "numeric":
        table = {n: float(v) for n, v in table.items()}
        bad = {n: v for n, v in table.items() if v < -tol}
        if bad:
            raise InconsistentRatesError(f"negative rates after consistency fill-in: {bad}")
        # snap round-off from the fill-in to zero
        table = {n: (0.0 if abs(v) <= tol else v) for n, v in table.items()}
    elif mode_inner == "exact":
        bad = {n: v for n, v in table.items() if v < 0}
        if bad:
            raise InconsistentRatesError(f"negative rates after consistency fill-in: {bad}")
    entries = {n: table[n] for n in RATE_NAMES}
    return RateTable(entries, mode, m.describe())


def xi0_mass(m: XiMeasure, mode: str = "numeric"):
    """Total mass of the multiple-collision part Xi_0 (Lambda kinds and atoms)."""
    if m.family == "pd":
        return _num(1, mode)
    if m.family == "atoms":
        total = sum(w for w, _ in m.atoms)
        return float(total) if mode == "numeric" else Fraction(total)
    return raw_moment(m, 0, mode)


# ---------------------------------------------------------------------
# consistency


@dataclass
class ConsistencyReport:
    b_max: int
    mode: str
    max_residual: float
    worst: str | None
    failures: list[tuple[str, object]]
    checked: int

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "b_max": self.b_max,
            "mode": self.mode,
            "checked": self.checked,
            "max_residual": self.max_residual,
            "worst_signature": self.worst,
            "failures": [[s, str(r)] for s, r in self.failures],
            "passed": self.passed,
        }


def consistency_residual(rate: Callable[[CollisionSignature], object], sig: CollisionSignature):
    """lambda_b - (sum of the level-(b+1) rates that restrict to it)."""
    rhs = 0
    for i in range(sig.r):
        ks = list(sig.ks)
        ks[i] += 1
        rhs = rhs + rate(CollisionSignature.of(ks, sig.s))
    if sig.s > 0:
        rhs = rhs + sig.s * rate(CollisionSignature.of(list(sig.ks) + [2], sig.s - 1))
    rhs = rhs + rate(CollisionSignature.of(sig.ks, sig.s + 1))
    return rate(sig) - rhs


def check_consistency(m: XiMeasure, b_max: int = 6, mode: str = "numeric", tol: float = 1e-10) -> ConsistencyReport:
    """Verify the sampling-consistency recursion for every signature with b <= b_max."""
    _check_mode(mode)
    if b_max < 2:
        raise ValueError("b_max must be >= 2")

    @lru_cache(maxsize=None)
    def rate(sig):
        return lambda_rate(m, sig, mode)

    worst, max_res, failures, checked = None, 0.0, [], 0
    for b in range(2, b_max + 1):
        for sig in signatures(b):
            res = consistency_residual(rate, sig)
            checked += 1
            if mode == "numeric":
                size = abs(float(res))
                if size > max_res:
                    max_res, worst = size, str(sig)
                if size > tol:
                    failures.append((str(sig), float(res)))
            else:
                zero = res == 0
                if not zero:
                    failures.append((str(sig), res))
                    worst = str(sig)
                    try:
                        max_res = max(max_res, abs(float(res)))
                    except (TypeError, ValueError):
                        max_res = math.inf
    return ConsistencyReport(b_max, mode, max_res, worst, failures, checked)


# ---------------------------------------------------------------------
# plain-text configuration


def measure_from_config(cfg: dict) -> XiMeasure:
    """Build a measure from string key/value pairs (``family``, ``sigma2``, ...).

    Recognized keys: family, sigma2, beta, gamma, epsilon, param, truncation,
    atoms (``"w:x1,x2; w:x1"``).  Missing family parameters mean symbolic.
    """
    fam = str(cfg.get("family", "kingman")).lower().replace("-", "").replace("_", "")
    aliases = {"kingman": "kingman", "beta": "beta", "powerlaw": "powerlaw", "delta1": "delta1",
               "atoms": "atoms", "simplexatoms": "atoms", "pd": "pd", "poissondirichlet": "pd"}
    if fam not in aliases:
        raise ValueError(f"unknown family {cfg.get('family')!r}")
    fam = aliases[fam]
    sigma2 = _parse_number(cfg.get("sigma2", 1 if fam == "kingman" else 0))
    trunc = cfg.get("truncation")
    trunc = float(trunc) if trunc not in (None, "", "none") else None
    key = {"beta": "beta", "powerlaw": "gamma", "pd": "epsilon"}.get(fam)
    raw = cfg.get(key) if key else None
    if raw in (None, ""):
        raw = cfg.get("param")
    param = _parse_number(raw) if raw not in (None, "", "symbolic") else None
    if fam == "kingman":
        return XiMeasure.kingman(sigma2)
    if fam == "beta":
        return XiMeasure.beta(param, sigma2, trunc)
    if fam == "powerlaw":
        return XiMeasure.power_law(param, sigma2, trunc)
    if fam == "delta1":
        return XiMeasure.delta1(sigma2)
    if fam == "pd":
        return XiMeasure.poisson_dirichlet(param, sigma2)
    atoms = []
    for chunk in str(cfg.get("atoms", "")).split(";"):
        if not chunk.strip():
            continue
        w, pts = chunk.split(":")
        atoms.append((_parse_number(w), tuple(_parse_number(c) for c in pts.split(","))))
    return XiMeasure.simplex_atoms(atoms, sigma2)


def _parse_number(v):
    """Exact Fraction for '1/2'-style or decimal strings; numbers pass through."""
    if isinstance(v, (int, float, Fraction)):
        return v
    return Fraction(str(v).strip())


def measure_to_json(m: XiMeasure) -> str:
    return json.dumps(m.describe(), sort_keys=True)


def rate_vector(table: RateTable) -> np.ndarray:
    return np.array([float(table[n]) for n in RATE_NAMES])
