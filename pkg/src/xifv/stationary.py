"""Stationary moments and reversibility obstructions in the two-type model.

Setting: E = {e1, e2}, parent-independent mutation at rate theta with
nu0(e1) = alpha = 1/2, F = {e1}, and m_i the i-th stationary moment of
mu({e1}).  All functions are generic over the number type: floats,
Fractions, RationalFunctions (and anything else closed under + - * /).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .measures import (CollisionSignature, RateTable, XiMeasure, named_rates,
                       signature_to_name)
from .partitions import count_by_signature
from .polynomial import Polynomial, RationalFunction, real_roots

HALF = Fraction(1, 2)


class KingmanDegenerateError(ValueError):
    """a_4 + 3 a_22 = 0: no multiple collisions, the coalescent is Kingman's."""


@dataclass
class MomentVector:
    m: tuple

    def __getitem__(self, i: int):
        """1-based access: mv[1] is m_1."""
        return self.m[i - 1]

    def __len__(self):
        return len(self.m)

    def evaluate(self, x) -> "MomentVector":
        return MomentVector(tuple(v(x) if isinstance(v, RationalFunction) else v for v in self.m))

    def is_admissible(self, tol: float = 1e-12) -> bool:
        """1/2 = m1 >= m2 >= ... >= 0 (numeric moments only)."""
        vals = [float(v) for v in self.m]
        return all(0 - tol <= v <= 1 + tol for v in vals) and all(
            a + tol >= b for a, b in zip(vals, vals[1:]))


def _rate(r: Mapping, sig: CollisionSignature):
    return r[signature_to_name(sig)]


def moment_coefficients(r: Mapping, n: int) -> dict[int, object]:
    """c[j] = total rate of mergers of n blocks into j blocks."""
    out: dict[int, object] = {}
    for sig, count in count_by_signature(n):
        j = sig.r + sig.s
        out[j] = out.get(j, 0) + count * _rate(r, sig)
    return out


def stationary_moments(r: Mapping, theta, alpha=HALF, order: int = 6) -> MomentVector:
    """m_1..m_order from the stationary balance of <mu^n, 1_F^n>.

    (sum_j c_j + n theta/2) m_n = sum_{j<n} c_j m_j + (n theta alpha / 2) m_{n-1},
    with c_j the total rate of n -> j block mergers.
    """
    if not 1 <= order <= 6:
        raise ValueError("named rates cover moments up to order 6")
    ms = [alpha]
    for n in range(2, order + 1):
        c = moment_coefficients(r, n)
        num = n * theta * alpha / 2 * ms[n - 2]
        den = n * theta / 2
        for j, cj in c.items():
            num = num + cj * ms[j - 1]
            den = den + cj
        if _is_zero(den):
            raise ZeroDivisionError(f"vanishing denominator for m_{n}")
        ms.append(num / den)
    return MomentVector(tuple(ms))


def _is_zero(v) -> bool:
    if isinstance(v, RationalFunction):
        return v.is_zero()
    try:
        return v == 0
    except TypeError:
        return False


def theta_necessary(r: Mapping):
    """The only mutation rate compatible with reversibility (from the p=1, q=3 balance).

    Raises KingmanDegenerateError when a_4 + 3 a_22 = 0.
    """
    a2, a3, a4, a211, a22 = r["2"], r["3"], r["4"], r["211"], r["22"]
    den = -a4 - 3 * a22
    if _is_zero(den):
        raise KingmanDegenerateError("a_4 + 3 a_22 = 0: coalescent degenerates to Kingman's")
    num = 2 * (6 * a4 * a2 - 11 * a3 * a2 + 3 * a3 * a211 - 3 * a211 * a2 - 4 * a4 * a3 + 6 * a3 * a3 + 3 * a2 * a2)
    return num / den


def theta_contradiction(theta) -> bool | None:
    """True if a numeric theta is not positive; None when undecidable (symbolic)."""
    if isinstance(theta, RationalFunction):
        if theta.is_const():
            return theta.constant() <= 0
        return None
    return theta <= 0


def reversibility_obstruction(r: Mapping, theta, q: int, alpha=HALF):
    """Balance E[F LG] - E[G LF] for F = <mu, 1_F>, G = <mu^q, 1_F^q>.

    Equals sum_pi beta_pi m_{|pi|+1} - (total) m_{q+1}
    + ((q-1) theta / 2)(alpha m_q - m_{q+1}); zero under reversibility.
    """
    if not 2 <= q <= 5:
        raise ValueError("q must lie in 2..5")
    mv = stationary_moments(r, theta, alpha, order=q + 1)
    c = moment_coefficients(r, q)
    out = (q - 1) * theta / 2 * (alpha * mv[q] - mv[q + 1])
    for j, cj in c.items():
        out = out + cj * (mv[j + 1] - mv[q + 1])
    return out


def obstruction_p1q3(r: Mapping, theta, alpha=HALF):
    """(3a21 + theta alpha) m3 + a3 m2 - (3a21 + a3 + theta) m4."""
    mv = stationary_moments(r, theta, alpha, order=4)
    a21, a3 = r["21"], r["3"]
    return (3 * a21 + theta * alpha) * mv[3] + a3 * mv[2] - (3 * a21 + a3 + theta) * mv[4]


def obstruction_p1q5(r: Mapping, theta, alpha=HALF):
    mv = stationary_moments(r, theta, alpha, order=6)
    a5, a32, a41, a311, a221, a2111 = r["5"], r["32"], r["41"], r["311"], r["221"], r["2111"]
    return (a5 * mv[2] + (10 * a32 + 5 * a41) * mv[3] + (10 * a311 + 15 * a221) * mv[4]
            + (10 * a2111 + 2 * theta * alpha) * mv[5]
            - (a5 + 10 * a32 + 5 * a41 + 10 * a311 + 15 * a221 + 10 * a2111 + 2 * theta) * mv[6])


# ---------------------------------------------------------------------
# verdicts

ADMISSIBLE = {
    "beta": (Fraction(0), Fraction(2)),
    "powerlaw": (Fraction(0), Fraction(1)),
    "pd": (Fraction(0), None),
}
THETA_RANGE = (Fraction(0), None)


@dataclass
class VerdictReport:
    family: str
    verdict: str
    route: str
    rates: dict
    theta: object
    obstruction: RationalFunction | Fraction
    symbol: str | None
    admissible_range: tuple | None
    roots_in_range: list[Fraction] = field(default_factory=list)
    real_roots: list[Fraction] = field(default_factory=list)
    poles_in_range: list[Fraction] = field(default_factory=list)

    @property
    def reversible_possible(self) -> bool:
        return self.verdict != "not reversible"

    def to_json(self) -> dict:
        ob = self.obstruction
        if isinstance(ob, RationalFunction):
            ob_json = {"expression": str(ob), **ob.to_dict()}
        else:
            ob_json = {"expression": str(ob), "value": str(ob)}
        rng = None
        if self.admissible_range is not None:
            lo, hi = self.admissible_range
            rng = [float(lo), None if hi is None else float(hi)]
        return {
            "family": self.family,
            "verdict": self.verdict,
            "route": self.route,
            "symbol": self.symbol,
            "rates": {f"a{k}": str(v) for k, v in self.rates.items()},
            "theta": str(self.theta),
            "obstruction": ob_json,
            "admissible_range": rng,
            "roots_in_range": [float(x) for x in self.roots_in_range],
            "real_roots": [float(x) for x in self.real_roots],
            "poles_in_range": [float(x) for x in self.poles_in_range],
        }


def _roots(p: Polynomial, rng):
    if p.is_const():
        return []
    lo, hi = rng
    return real_roots(p, lo, hi)


def reversibility_verdict(m: XiMeasure) -> VerdictReport:
    """Decide reversibility of the two-type (Xi, A)-Fleming-Viot process.

    Pipeline: named rates -> necessary theta -> p=1, q=5 obstruction; when
    the theta formula gives theta <= 0 (or is unavailable) the p=1, q=3
    obstruction is examined as a function of theta instead.
    """
    table = named_rates(m, "symbolic")
    rates = dict(table.entries)
    fam = m.family
    symbolic_family = fam in ADMISSIBLE and m.symbol is not None
    theta_sym = RationalFunction.var("theta")

    try:
        theta = theta_necessary(rates)
    except KingmanDegenerateError:
        ob3 = obstruction_p1q3(rates, theta_sym)
        ob5 = obstruction_p1q5(rates, theta_sym)
        verdict = "consistent with reversibility" if ob3.is_zero() and ob5.is_zero() else "not reversible"
        return VerdictReport(fam, verdict, "kingman-degenerate", rates, "any theta > 0", ob5, "theta", THETA_RANGE)

    contradiction = theta_contradiction(theta)
    if contradiction or not symbolic_family:
        if contradiction:
            # theta formula excludes every positive theta: examine q=3 in theta directly
            ob = obstruction_p1q3(rates, theta_sym)
            roots = _roots(ob.num, THETA_RANGE)
            verdict = "not reversible" if not ob.is_zero() and not roots else "undetermined"
            return VerdictReport(fam, verdict, "theta-free p1q3", rates, theta, ob, "theta", THETA_RANGE,
                                 roots, _roots(ob.num, (None, None)), _roots(ob.den, THETA_RANGE))
        ob = obstruction_p1q5(rates, theta)
        val = ob.constant() if isinstance(ob, RationalFunction) else ob
        verdict = "not reversible" if val != 0 else "undetermined"
        return VerdictReport(fam, verdict, "numeric p1q5", rates, theta, val, None, None)

    ob = obstruction_p1q5(rates, theta)
    rng = ADMISSIBLE[fam]
    if not isinstance(ob, RationalFunction):
        ob = RationalFunction(Polynomial([ob], m.symbol))
    roots = _roots(ob.num, rng)
    verdict = "not reversible" if not ob.is_zero() and not roots else "undetermined"
    return VerdictReport(fam, verdict, "theta-necessary p1q5", rates, theta, ob, m.symbol, rng,
                         roots, _roots(ob.num, (None, None)), _roots(ob.den, rng))
