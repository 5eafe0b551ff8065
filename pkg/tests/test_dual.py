import math

import numpy as np
import pytest

from xifv._rng import path_rng
from xifv.dual import (MutationGenerator, NonErgodicError, indicator_power, pair, phi_pi,
                       product_semigroup, simulate_dual, stationary_moment_by_absorption, tabulate)
from xifv.measures import XiMeasure
from xifv.partitions import Partition

A1 = MutationGenerator.parent_independent(1.0, [0.5, 0.5])


def test_phi_pi_worked_example():
    rng = np.random.default_rng(0)
    g = rng.random((2,) * 6)
    p = Partition(((1, 4), (2, 3, 6), (5,)))
    out = phi_pi(g, p)
    for x1 in range(2):
        for x2 in range(2):
            for x3 in range(2):
                assert out[x1, x2, x3] == g[x1, x2, x2, x1, x3, x2]


def test_phi_pi_identity_and_diagonal():
    g = np.random.default_rng(1).random((3, 3, 3))
    assert np.array_equal(phi_pi(g, Partition.singletons(3)), g)
    f = indicator_power(2, 2, [0])
    assert np.array_equal(phi_pi(f, Partition(((1, 2),))), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        phi_pi(f, Partition.singletons(3))


def test_mutation_generator_validation():
    with pytest.raises(ValueError):
        MutationGenerator(np.array([[1.0, -1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        MutationGenerator(np.array([[-1.0, 0.5], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        MutationGenerator.parent_independent(1.0, [0.3, 0.3])


def test_parent_independent_closed_form_vs_expm():
    A = MutationGenerator.parent_independent(1.7, [0.2, 0.5, 0.3])
    B = MutationGenerator(A.Q)
    for t in (0.0, 0.3, 2.0):
        assert np.allclose(A.transition(t), B.transition(t), atol=1e-13)


def test_n1_matrix_exponential_vs_euler():
    Q = np.array([[-1.0, 0.7, 0.3], [0.2, -0.5, 0.3], [0.4, 0.4, -0.8]])
    A = MutationGenerator(Q)
    f = np.array([1.0, -2.0, 0.5])
    t, steps = 1.3, 200_000
    h = t / steps
    z = f.copy()
    for _ in range(steps):
        # RK4 on dz/dt = Q z
        k1 = Q @ z
        k2 = Q @ (z + h / 2 * k1)
        k3 = Q @ (z + h / 2 * k2)
        k4 = Q @ (z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert np.max(np.abs(A.transition(t) @ f - z)) < 1e-8


def test_pure_mutation_dual_is_semigroup():
    m = XiMeasure.kingman(1)
    f = np.array([1.0, 0.0])
    st = simulate_dual(1, f, m, A1, 0.8, seed=0)
    decay = math.exp(-0.5 * 0.8)
    assert np.allclose(st.z, decay * f + (1 - decay) * 0.5)


def test_delta1_single_jump_to_one_block():
    f = indicator_power(2, 3, [0])
    for i in range(20):
        st = simulate_dual(3, f, XiMeasure.delta1(), A1, math.inf, path_rng(0, i))
        assert st.m == 1 and st.z.shape == (2,)


def test_kingman_pair_jump_is_diagonal_of_mutated_table():
    m = XiMeasure.kingman(1)
    f = np.random.default_rng(2).random((2, 2))
    rng = path_rng(4, 0)
    tau = rng.exponential(1.0)
    st = simulate_dual(2, f, m, A1, math.inf, path_rng(4, 0))
    assert st.t == pytest.approx(tau)
    expect = np.diagonal(product_semigroup(f, A1.transition(tau)))
    assert np.allclose(st.z, expect)


def test_dual_values_stay_in_range():
    f = tabulate(lambda a, b, c: (a + 2 * b - c) / 3, 2, 3)
    lo, hi = f.min(), f.max()
    for i in range(200):
        st = simulate_dual(3, f, XiMeasure.beta(1.2), A1, 1.5, path_rng(9, i))
        assert lo - 1e-12 <= st.z.min() and st.z.max() <= hi + 1e-12
        assert st.z.size == 2**st.m


def test_negative_horizon_and_shape_errors():
    f = indicator_power(2, 2, [0])
    with pytest.raises(ValueError):
        simulate_dual(2, f, XiMeasure.kingman(1), A1, -1.0)
    with pytest.raises(ValueError):
        simulate_dual(3, f, XiMeasure.kingman(1), A1, 1.0)


def test_absorption_n1_exact_and_nonergodic():
    f = np.array([1.0, 0.0])
    est = stationary_moment_by_absorption(1, f, XiMeasure.kingman(1), A1, 10)
    assert est.estimate == 0.5 and est.stderr == 0.0
    with pytest.raises(NonErgodicError):
        stationary_moment_by_absorption(2, indicator_power(2, 2, [0]), XiMeasure.kingman(1),
                                        MutationGenerator.zero(2), 10)


@pytest.mark.parametrize("m", [XiMeasure.kingman(1), XiMeasure.beta(1.5), XiMeasure.delta1()])
def test_absorption_moments_n2_n3(m):
    from xifv.measures import named_rates
    a2 = named_rates(m)["2"]
    theta, alpha = 1.0, 0.5
    exact = {2: (a2 + theta * alpha) / (a2 + theta) * alpha, 3: (4 * a2 + theta) / (8 * (a2 + theta))}
    for n in (2, 3):
        est = stationary_moment_by_absorption(n, indicator_power(2, n, [0]), m, A1, 4000, seed=n)
        assert abs(est.estimate - exact[n]) <= 3 * est.stderr


def test_pair_and_product_semigroup():
    mu = np.array([0.3, 0.7])
    z = indicator_power(2, 2, [0])
    assert pair(mu, z) == pytest.approx(0.09)
    P = A1.transition(0.4)
    assert np.allclose(product_semigroup(z, P), np.outer(P[:, 0], P[:, 0]))
