import math

import numpy as np
import pytest

from xifv.dual import MutationGenerator, indicator_power
from xifv.fv import (FVState, InfiniteRateError, JumpEvent, JumpSampler, apply_jump, moment_duality_check,
                     project_simplex, simulate_fv, simulate_fv_batch, step_diffusion, wright_fisher_noise)
from xifv.measures import XiMeasure, named_rates

A1 = MutationGenerator.parent_independent(1.0, [0.5, 0.5])


def test_apply_jump_examples():
    assert np.allclose(apply_jump(FVState([0.3, 0.7]), JumpEvent(0.0, [1.0], [0])).p, [1.0, 0.0])
    assert np.allclose(apply_jump(FVState([0.6, 0.4]), JumpEvent(0.0, [0.5], [1])).p, [0.3, 0.7])
    assert np.allclose(apply_jump(FVState([0.6, 0.4]), JumpEvent(0.0, [], [])).p, [0.6, 0.4])
    with pytest.raises(ValueError):
        JumpEvent(0.0, [0.7, 0.6], [0, 1])
    with pytest.raises(ValueError):
        apply_jump(FVState([0.6, 0.4]), JumpEvent(0.0, [0.5], [2]))


def test_state_validation():
    with pytest.raises(ValueError):
        FVState([0.5, 0.6])
    with pytest.raises(ValueError):
        FVState([-0.1, 1.1])


def test_step_diffusion_trivial_and_drift():
    rng = np.random.default_rng(0)
    x = FVState([0.3, 0.7])
    assert np.allclose(step_diffusion(x, MutationGenerator.zero(2), 0.0, 0.01, rng).p, x.p)
    theta, dt = 2.0, 1e-3
    A = MutationGenerator.parent_independent(theta, [0.5, 0.5])
    new = step_diffusion(x, A, 0.0, dt, rng)
    assert new.p[0] - 0.3 == pytest.approx(theta / 2 * (0.5 - 0.3) * dt, rel=1e-12)


def test_increment_mean_and_variance():
    rng = np.random.default_rng(1)
    dt, sigma2, N = 1e-3, 1.0, 100_000
    P = np.tile([0.5, 0.5], (N, 1))
    inc = wright_fisher_noise(P, sigma2, dt, rng)[:, 0]
    se = inc.std(ddof=1) / math.sqrt(N)
    assert abs(inc.mean()) <= 3 * se
    var = inc.var(ddof=1)
    # Var of the sample variance for Gaussian increments
    assert abs(var - sigma2 * 0.25 * dt) <= 3 * var * math.sqrt(2 / (N - 1))


def test_noise_covariance_matches_wright_fisher():
    rng = np.random.default_rng(2)
    p = np.array([0.2, 0.3, 0.5])
    inc = wright_fisher_noise(np.tile(p, (200_000, 1)), 1.0, 1.0, rng)
    assert np.allclose(inc.sum(axis=1), 0.0, atol=1e-12)
    assert np.allclose(np.cov(inc.T), np.diag(p) - np.outer(p, p), atol=5e-3)


def test_simplex_preserved():
    m = XiMeasure.beta(1.5, sigma2=1.0, truncation=1e-2)
    path = simulate_fv([0.05, 0.95], m, A1, 0.5, dt=1e-3, seed=3)
    assert (path.states >= 0).all()
    assert np.allclose(path.states.sum(axis=1), 1.0, atol=1e-12)
    assert len(path.jumps) > 0


def test_infinite_rate_requires_truncation():
    with pytest.raises(InfiniteRateError):
        JumpSampler(XiMeasure.beta(1.5))
    with pytest.raises(InfiniteRateError):
        simulate_fv([0.5, 0.5], XiMeasure.power_law(0.5), A1, 0.1, seed=0)


def test_jump_sampler_law():
    m = XiMeasure.beta(1.5, truncation=1e-3)
    js = JumpSampler(m)
    z = js.sample(np.random.default_rng(4), 100_000)[:, 0]
    assert z.min() >= math.sqrt(1e-3) and z.max() <= 1.0
    # E[z^2] under the jump law equals (truncated a_2) / rate
    a2 = named_rates(m)["2"]
    se = (z**2).std() / math.sqrt(len(z))
    assert abs((z**2).mean() - a2 / js.rate) <= 3 * se


def test_delta1_freezes_at_vertex():
    m = XiMeasure.delta1()
    A0 = MutationGenerator.zero(2)
    finals, times = [], []
    for s in range(400):
        path = simulate_fv([0.3, 0.7], m, A0, 3.0, dt=1e-2, seed=s)
        if path.jumps:
            times.append(path.jumps[0].time)
            finals.append(path.states[-1][0])
            assert len(path.jumps) >= 1
            first = np.searchsorted(path.times, path.jumps[0].time)
            assert np.allclose(path.states[:first], [0.3, 0.7])
    finals = np.array(finals)
    assert set(np.round(finals, 12)) <= {0.0, 1.0}
    p = finals.mean()
    assert abs(p - 0.3) <= 3 * math.sqrt(0.3 * 0.7 / len(finals))
    # P(no jump by t=3) = e^-3
    assert abs(len(times) / 400 - (1 - math.exp(-3))) <= 3 * math.sqrt(math.exp(-3) * (1 - math.exp(-3)) / 400)


def test_martingale_compensated_drift():
    theta = 2.0
    A = MutationGenerator.parent_independent(theta, [0.5, 0.5])
    m = XiMeasure.kingman(1)
    x0 = np.array([0.2, 0.8])
    t, dt, N = 0.5, 1e-3, 20_000
    acc = np.zeros(N)

    def observe(step, P):
        acc[:] += (A.Q @ np.array([1.0, 0.0]))[None, :].dot(P.T)[0] * dt

    P = simulate_fv_batch(x0, m, A, t, dt, N, seed=5, observe=observe, observe_every=1)
    mart = P[:, 0] - x0[0] - acc
    se = mart.std(ddof=1) / math.sqrt(N)
    assert abs(mart.mean()) <= 3 * se


def test_kingman_stationary_mean():
    P = simulate_fv_batch([0.9, 0.1], XiMeasure.kingman(1), A1, 6.0, 2e-3, 4000, seed=6)
    se = P[:, 0].std(ddof=1) / math.sqrt(len(P))
    assert abs(P[:, 0].mean() - 0.5) <= 3 * se


def test_truncated_beta_stationary_second_moment():
    m = XiMeasure.beta(1.5, truncation=1e-3)
    a2 = named_rates(m)["2"]
    theta = 1.0
    exact = (2 * a2 + theta) / (4 * (a2 + theta))
    N, dt = 4000, 2e-3
    sums = np.zeros(N)
    count = [0]

    def observe(step, P):
        if step * dt > 3.0:
            sums[:] += P[:, 0] ** 2
            count[0] += 1

    simulate_fv_batch([0.5, 0.5], m, A1, 5.0, dt, N, seed=7, observe=observe, observe_every=25)
    avg = sums / count[0]
    se = avg.std(ddof=1) / math.sqrt(N)
    assert abs(avg.mean() - exact) <= 3 * se


def test_duality_t0_exact():
    rep = moment_duality_check([0.3, 0.7], XiMeasure.kingman(1), A1, 2, indicator_power(2, 2, [0]), 0.0, 100)
    assert rep.forward.estimate == rep.dual.estimate == pytest.approx(0.09) and rep.z == 0


def test_duality_kingman_small():
    rep = moment_duality_check([0.3, 0.7], XiMeasure.kingman(1), A1, 2, indicator_power(2, 2, [0]), 1.0,
                               10_000, dt=1e-3, seed=8)
    assert abs(rep.z) <= 3


def test_project_simplex():
    assert np.allclose(project_simplex(np.array([-0.1, 0.6, 0.6])), [0.0, 0.5, 0.5])
