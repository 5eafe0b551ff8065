"""The function-valued (Xi, A)-coalescent dual on a finite type space.

Functions on E^m are numpy arrays of shape ``(d,) * m``; axis j holds the
j-th argument.  Types are 0..d-1.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._rng import path_rng
from .measures import XiMeasure
from .partitions import Partition, simulate_block_counts


class NonErgodicError(ValueError):
    """The mutation chain has no unique invariant distribution."""


@dataclass(frozen=True)
class MutationGenerator:
    """Rate matrix of the mutation chain on E = {0..d-1}.

    ``theta``/``nu0`` are set for parent-independent mutation,
    A f(x) = theta/2 * sum_y (f(y) - f(x)) nu0(y).
    """

    Q: np.ndarray
    theta: float | None = None
    nu0: np.ndarray | None = field(default=None)

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("rate matrix must be square")
        off = Q - np.diag(np.diag(Q))
        if (off < 0).any():
            raise ValueError("off-diagonal rates must be nonnegative")
        if not np.allclose(Q.sum(axis=1), 0.0, atol=1e-12):
            raise ValueError("rows of a rate matrix must sum to zero")
        object.__setattr__(self, "Q", Q)

    @classmethod
    def parent_independent(cls, theta: float, nu0) -> "MutationGenerator":
        nu0 = np.asarray(nu0, dtype=float)
        if (nu0 < 0).any() or not math.isclose(nu0.sum(), 1.0, abs_tol=1e-12):
            raise ValueError("nu0 must be a probability vector")
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        d = len(nu0)
        Q = 0.5 * theta * (np.outer(np.ones(d), nu0) - np.eye(d))
        return cls(Q, float(theta), nu0)

    @classmethod
    def zero(cls, d: int) -> "MutationGenerator":
        return cls(np.zeros((d, d)), 0.0, np.full(d, 1.0 / d))

    @property
    def d(self) -> int:
        return self.Q.shape[0]

    def transition(self, t: float) -> np.ndarray:
        """P_t = exp(tQ)."""
        if self.theta is not None:
            decay = math.exp(-0.5 * self.theta * t)
            return decay * np.eye(self.d) + (1 - decay) * np.outer(np.ones(self.d), self.nu0)
        return linalg.expm(t * self.Q)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.Q @ f

    def stationary(self) -> np.ndarray:
        """The unique invariant distribution; NonErgodicError if there is none."""
        if self.theta is not None and self.theta > 0:
            return self.nu0.copy()
        ns = linalg.null_space(self.Q.T)
        if ns.shape[1] != 1:
            raise NonErgodicError(f"invariant distributions form a {ns.shape[1]}-dimensional family")
        nu = ns[:, 0] / ns[:, 0].sum()
        if (nu < -1e-12).any():
            raise NonErgodicError("null vector is not a distribution")
        return np.clip(nu, 0.0, None)

    def describe(self) -> dict:
        if self.theta is not None:
            return {"theta": self.theta, "nu0": self.nu0.tolist()}
        return {"Q": self.Q.tolist()}


def tabulate(fn, d: int, n: int) -> np.ndarray:
    """Table of ``fn(x1, ..., xn)`` over E^n."""
    out = np.empty((d,) * n)
    for idx in itertools.product(range(d), repeat=n):
        out[idx] = fn(*idx)
    return out


def indicator_power(d: int, n: int, F) -> np.ndarray:
    """Table of 1_{F x ... x F} on E^n."""
    v = np.zeros(d)
    v[list(F)] = 1.0
    out = np.ones(())
    for _ in range(n):
        out = np.multiply.outer(out, v)
    return out


def phi_pi(g: np.ndarray, p: Partition) -> np.ndarray:
    """Identify the arguments of g within each block of p.

    (Phi_p g)(x_1..x_|p|) = g(x_{i_1}, ..., x_{i_n}) with i_j the block of j.
    """
    if g.ndim != p.n:
        raise ValueError(f"function of {g.ndim} arguments, partition of {p.n}")
    letters = string.ascii_letters
    labels = p.block_of()
    src = "".join(letters[k] for k in labels)
    dst = letters[: len(p)]
    return np.einsum(f"{src}->{dst}", g).copy()


def product_semigroup(z: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Apply the transition matrix P to every argument of z."""
    for axis in range(z.ndim):
        z = np.moveaxis(np.tensordot(P, z, axes=([1], [axis])), 0, axis)
    return z


def pair(mu: np.ndarray, z: np.ndarray) -> float:
    """<mu^m, z> for a probability vector mu and a table z on E^m."""
    for _ in range(z.ndim):
        z = np.tensordot(mu, z, axes=([0], [0]))
    return float(z)


@dataclass
class DualState:
    m: int
    z: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.z.ndim != self.m:
            raise ValueError("table arity differs from block count")


def simulate_dual(n: int, f: np.ndarray, m: XiMeasure, A: MutationGenerator,
                  horizon: float, seed=0) -> DualState:
    """Run the dual from (n, f) up to ``horizon``.

    With an infinite horizon the run stops at the first time a single block
    remains, and the returned state is the one at that time.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    f = np.asarray(f, dtype=float)
    if f.ndim != n or any(s != A.d for s in f.shape):
        raise ValueError(f"f must have shape {(A.d,) * n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z, t = f, 0.0
    for tj, q in simulate_block_counts(n, m, horizon, rng):
        if tj > t:
            z = product_semigroup(z, A.transition(tj - t))
        z = phi_pi(z, q)
        t = tj
    if math.isinf(horizon):
        return DualState(z.ndim, z, t)
    if horizon > t:
        z = product_semigroup(z, A.transition(horizon - t))
    return DualState(z.ndim, z, horizon)


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    paths: int
    seed: int | None = None

    def to_json(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr, "paths": self.paths, "seed": self.seed}

    @classmethod
    def from_samples(cls, values: np.ndarray, seed=None) -> "MCEstimate":
        values = np.asarray(values, dtype=float)
        se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
        return cls(float(values.mean()), se, len(values), seed)


def stationary_moment_by_absorption(n: int, f: np.ndarray, m: XiMeasure, A: MutationGenerator,
                                    paths: int, seed: int = 0) -> MCEstimate:
    """Monte Carlo estimate of the stationary moment <mu^n, f> integrated over Pi.

    Runs the dual until a single block remains and averages <nu, Z_tau>,
    where nu is the invariant law of the mutation chain.
    """
    nu = A.stationary()
    f = np.asarray(f, dtype=float)
    if n == 1:
        return MCEstimate(pair(nu, f), 0.0, paths, seed)
    vals = np.empty(paths)
    for i in range(paths):
        st = simulate_dual(n, f, m, A, math.inf, path_rng(seed, i))
        if st.m != 1:
            raise RuntimeError("coalescent failed to absorb; measure has no mergers")
        vals[i] = nu @ st.z
    return MCEstimate.from_samples(vals, seed)


def dual_moment_samples(x0, n: int, f: np.ndarray, m: XiMeasure, A: MutationGenerator,
                        t: float, paths: int, seed: int = 0) -> np.ndarray:
    """Samples of <x0^{M_t}, Z_t>, the dual side of the moment duality."""
    x0 = np.asarray(x0, dtype=float)
    out = np.empty(paths)
    for i in range(paths):
        st = simulate_dual(n, f, m, A, t, path_rng(seed, i))
        out[i] = pair(x0, st.z)
    return out
