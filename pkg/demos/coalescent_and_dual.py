"""Sample a few Xi-coalescent genealogies and run the function-valued dual.

The dual started from 1_{type 0}^n, absorbed at a single block, gives the n-th
stationary moment of the Fleming-Viot frequency of type 0; here it is checked
against the closed form from the moment recursion.
"""
import math

from xifv.dual import MutationGenerator, indicator_power, stationary_moment_by_absorption
from xifv.measures import XiMeasure, named_rates
from xifv.partitions import absorption_times, first_jump_law, simulate_coalescent

m = XiMeasure.beta(1.5, sigma2=0.5)
path = simulate_coalescent(6, m, seed=1)
print("one Beta(1.5) + Kingman genealogy of 6 lineages:")
for t, sig, st in zip(path.times, path.signatures, path.states[1:]):
    print(f"  t={t:7.4f}  {str(sig):12s} {st}")

print("first-jump law for n=4:")
for sig, p in sorted(first_jump_law(4, m).items(), key=lambda kv: -kv[1]):
    print(f"  {str(sig):12s} {p:.4f}")

t = absorption_times(4, m, 5000, seed=2)
print(f"mean time to MRCA of 4 lineages: {t.mean():.4f} +- {t.std(ddof=1) / math.sqrt(len(t)):.4f}")

A = MutationGenerator.parent_independent(1.0, [0.5, 0.5])
a2 = float(named_rates(m)["2"])
for n, exact in ((2, (a2 + 0.5) / (a2 + 1) * 0.5), (3, (4 * a2 + 1) / (8 * (a2 + 1)))):
    est = stationary_moment_by_absorption(n, indicator_power(2, n, [0]), m, A, 20_000, seed=n)
    print(f"m_{n}: dual {est.estimate:.4f} +- {est.stderr:.4f}, formula {exact:.4f}")
