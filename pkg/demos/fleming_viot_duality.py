"""Forward (Xi, A)-Fleming-Viot paths and the moment duality.

One two-type path under truncated Beta(1.5) resampling with a Kingman part,
then the check that the forward Euler scheme with Poisson jumps and the
coalescent dual agree on E <X_t^n, 1_{type 0}^n> for three resampling measures
(Kingman, delta_1 whole-population replacement, truncated Beta).
"""
import numpy as np

from xifv.dual import MutationGenerator, indicator_power
from xifv.fv import moment_duality_check, simulate_fv
from xifv.measures import XiMeasure

A = MutationGenerator.parent_independent(1.0, [0.5, 0.5])
m = XiMeasure.beta(1.5, sigma2=1.0, truncation=1e-2)
path = simulate_fv([0.3, 0.7], m, A, 2.0, dt=1e-3, seed=3)
print(f"{len(path.jumps)} jumps in [0, 2]; largest jump z = {max(j.z[0] for j in path.jumps):.3f}")
print("type-0 frequency at t = 0, 0.5, 1, 1.5, 2:",
      np.round(path.states[::500, 0], 3).tolist())

for meas in (XiMeasure.kingman(1), XiMeasure.delta1(), m):
    for n in (2, 3):
        rep = moment_duality_check([0.3, 0.7], meas, A, n, indicator_power(2, n, [0]), 1.0, 20_000, seed=n)
        print(f"{meas.family:8s} n={n}: forward {rep.forward.estimate:.4f}  dual {rep.dual.estimate:.4f}  "
              f"z={rep.z:+.2f}")
