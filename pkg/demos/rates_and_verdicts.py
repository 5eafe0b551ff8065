"""Collision rates, the consistency recursion and the reversibility verdicts.

Walks through the three Lambda families with a closed form (Beta, power law,
Poisson-Dirichlet) plus the point mass at 1 and prints what the stationary
moment recursion says about reversibility.
"""
from fractions import Fraction

from xifv.measures import CollisionSignature, XiMeasure, check_consistency, lambda_rate, named_rates
from xifv.stationary import reversibility_verdict, stationary_moments

S = CollisionSignature.of

# Beta(2 - b, b) rates: a binary merger among 2 blocks and a triple merger among 3
beta = XiMeasure.beta(Fraction(3, 2))
print("Beta(1/2, 3/2):")
print("  lambda_{2;2;0} =", lambda_rate(beta, S([2], 0), "exact"))
print("  lambda_{3;3;0} =", lambda_rate(beta, S([3], 0), "exact"))
print("  lambda_{3;2;1} =", lambda_rate(beta, S([2], 1), "exact"))

# same thing with the parameter left free
sym = named_rates(XiMeasure.beta(), "symbolic")
print("  a2(beta) =", sym["2"])
print("  a3(beta) =", sym["3"])

# the recursion lambda_{b;k;s} = lambda_{b+1;k+1;s} + (s+1) lambda_{b+1;k;s+1} + ... holds exactly
rep = check_consistency(XiMeasure.power_law(), 6, "symbolic")
print("power-law consistency up to b=6:", "ok" if rep.passed else "FAILED", f"({rep.checked} signatures)")

# moments of the stationary law under parent-independent mutation with theta=1
table = named_rates(XiMeasure.kingman(Fraction(1)), "exact")
mv = stationary_moments(table.entries, Fraction(1), order=4)
print("Kingman stationary moments m1..m4:", [str(mv[k]) for k in range(1, 5)])

for m in (XiMeasure.beta(), XiMeasure.power_law(), XiMeasure.poisson_dirichlet(), XiMeasure.delta1(),
          XiMeasure.kingman(1)):
    v = reversibility_verdict(m)
    print(f"{m.family:9s} -> {v.verdict} (route: {v.route})")
