"""Explicit solver for the distribution-function SPDE of the (Xi, 1/2 Delta)-FV process.

For u_t(x) = X_t((-inf, x]):

    du = 1/2 u'' dt + sigma int_0^1 (1{y <= u} - u) W(dt, dy)
         + int (sum z_i 1{y_i <= u} + (1 - sum z_i) u - u) N(dt, dz, dy)

The white noise in y is discretized on equal strata of (0, 1]; the jump part
uses the (finite-rate, possibly truncated) clock of :class:`JumpSampler`.
Fields are arrays whose last axis is the grid, so a batch of paths is just a
2-d array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._rng import path_rng
from .fv import JumpSampler
from .measures import XiMeasure

STRATA = 64
BOUNDARY_TOL = 1e-6


class CFLError(ValueError):
    """Time step too large for the explicit heat step."""


@dataclass
class GridField:
    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape[-1] != len(self.x):
            raise ValueError("field and grid lengths differ")

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def L(self) -> float:
        return float(self.x[-1] - self.x[0]) / 2

    def check(self, tol: float = BOUNDARY_TOL) -> None:
        u = self.u
        if (np.diff(u, axis=-1) < -1e-12).any():
            raise ValueError("field is not nondecreasing")
        if (u < -1e-12).any() or (u > 1 + 1e-12).any():
            raise ValueError("field leaves [0, 1]")
        if (np.abs(u[..., 0]) > tol).any() or (np.abs(u[..., -1] - 1) > tol).any():
            raise ValueError("boundary values are not pinned at 0 and 1")

    def to_csv(self) -> str:
        rows = ["x,u"] + [f"{a!r},{b!r}" for a, b in zip(self.x, np.atleast_1d(self.u))]
        return "\n".join(rows) + "\n"


def grid(L: float = 10.0, K: int = 512) -> np.ndarray:
    return np.linspace(-L, L, K + 1)


def normal_cdf_field(L: float = 10.0, K: int = 512, scale: float = 1.0, loc: float = 0.0) -> GridField:
    x = grid(L, K)
    u = special.ndtr((x - loc) / scale)
    u[0], u[-1] = 0.0, 1.0
    return GridField(x, u)


def default_dt(h: float) -> float:
    return h * h / 4


def heat_step(u: np.ndarray, dt: float, h: float) -> np.ndarray:
    """u + dt/2 * (centered second difference); boundary values kept."""
    out = u.copy()
    out[..., 1:-1] += 0.5 * dt / (h * h) * (u[..., 2:] - 2 * u[..., 1:-1] + u[..., :-2])
    return out


def noise_increment(u: np.ndarray, sigma: float, dW: np.ndarray) -> np.ndarray:
    """sigma * sum_j (1{y_j <= u} - u) dW_j over strata midpoints y_j.

    ``dW`` has shape (..., S); uses the prefix sums of dW so the cost does
    not grow with S.
    """
    S = dW.shape[-1]
    C = np.concatenate([np.zeros(dW.shape[:-1] + (1,)), np.cumsum(dW, axis=-1)], axis=-1)
    # number of midpoints (j - 1/2)/S that are <= u
    idx = np.clip(np.floor(u * S + 0.5).astype(np.int64), 0, S)
    return sigma * (np.take_along_axis(C, idx, axis=-1) - u * C[..., -1:])


def jump_update(u: np.ndarray, z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """u <- sum_i z_i 1{y_i <= u} + (1 - sum z) u, pointwise in x.

    ``u``: (P, K+1); ``z``, ``y``: (P, w).
    """
    out = u * (1.0 - z.sum(axis=-1, keepdims=True))
    for i in range(z.shape[-1]):
        out += z[:, i:i + 1] * (y[:, i:i + 1] <= u)
    return out


def rearrange(u: np.ndarray) -> np.ndarray:
    """Clip to [0, 1], sort each row and pin the ends at 0 and 1."""
    u = np.sort(np.clip(u, 0.0, 1.0), axis=-1)
    u[..., 0], u[..., -1] = 0.0, 1.0
    return u


def step_spde(u: np.ndarray, sigma: float, jumps: JumpSampler | None, dt: float, h: float, rng,
              strata: int = STRATA) -> np.ndarray:
    """One explicit step for a field (K+1,) or a batch (P, K+1)."""
    if dt > h * h / 2 * (1 + 1e-12):
        raise CFLError(f"dt={dt:.3g} exceeds h^2/2={h * h / 2:.3g}")
    single = u.ndim == 1
    U = u[None, :] if single else u
    new = heat_step(U, dt, h)
    if sigma > 0:
        dW = rng.standard_normal((len(U), strata)) * math.sqrt(dt / strata)
        new = new + noise_increment(U, sigma, dW)
    if jumps is not None and jumps.rate > 0:
        counts = rng.poisson(jumps.rate * dt, size=len(U))
        k = 0
        while True:
            idx = np.nonzero(counts > k)[0]
            if len(idx) == 0:
                break
            z = jumps.sample(rng, len(idx))
            y = rng.random(z.shape)
            new[idx] = jump_update(new[idx], z, y)
            k += 1
    new = rearrange(new)
    return new[0] if single else new


def simulate_spde(u0: GridField, sigma: float, measure: XiMeasure | None, t: float, paths: int,
                  dt: float | None = None, seed: int = 0, chunk: int = 2500, strata: int = STRATA) -> np.ndarray:
    """Fields at time t for ``paths`` independent runs, shape (paths, K+1).

    Chunk c uses the sub-stream keyed by (seed, c).
    """
    h = u0.h
    dt = default_dt(h) if dt is None else dt
    steps = int(round(t / dt))
    jumps = JumpSampler(measure) if measure is not None and measure.family != "kingman" else None
    out = np.empty((paths, len(u0.x)))
    for c, start in enumerate(range(0, paths, chunk)):
        size = min(chunk, paths - start)
        rng = path_rng(seed, c)
        U = np.tile(u0.u, (size, 1))
        for _ in range(steps):
            U = step_spde(U, sigma, jumps, dt, h, rng, strata)
        out[start:start + size] = U
    return out


def solve_heat(u0: GridField, t: float, dt: float | None = None) -> GridField:
    """Deterministic limit (sigma = 0, no jumps)."""
    dt = default_dt(u0.h) if dt is None else dt
    steps = max(1, int(math.ceil(t / dt - 1e-9)))
    dt = t / steps
    u = u0.u.copy()
    for _ in range(steps):
        u = heat_step(u, dt, u0.h)
    return GridField(u0.x, u)


# ---------------------------------------------------------------------
# pairings


def pair_field(x: np.ndarray, u: np.ndarray, f, compact: bool = True, tol: float = 1e-8) -> np.ndarray:
    """<X, f> for X with distribution function u (piecewise linear between nodes).

    Each cell's mass u_k - u_{k-1} is spread uniformly over the cell and f is
    averaged there by Simpson's rule.
    """
    fa, fb = f(x[:-1]), f(x[1:])
    if compact and (abs(fa[0]) > tol or abs(fb[-1]) > tol):
        raise ValueError("test function is not supported inside the grid")
    cell_mean = (fa + 4 * f(0.5 * (x[:-1] + x[1:])) + fb) / 6
    return np.diff(u, axis=-1) @ cell_mean


def field_to_measure_moments(u: GridField, f, n: int = 1, compact: bool = True):
    """<X^n, f x ... x f> = <X, f>^n."""
    return pair_field(u.x, u.u, f, compact) ** n


# ---------------------------------------------------------------------
# Gaussian oracles for the heat semigroup


@dataclass(frozen=True)
class GaussianBump:
    """f(x) = exp(-(x - center)^2 / (2 width^2))."""

    center: float = 0.0
    width: float = 1.0

    def __call__(self, x):
        return np.exp(-((x - self.center) ** 2) / (2 * self.width**2))


# A Gaussian kernel coef * exp(-(x - c)^2 / (2 v)) is kept as (coef, c, v).


def _heat(k, r):
    """P_r applied to the kernel k."""
    coef, c, v = k
    return coef * math.sqrt(v / (v + r)), c, v + r


def _against_normal(k, s2):
    """<N(0, s2), k> = (P_{s2} k)(0)."""
    coef, c, v = _heat(k, s2)
    return coef * math.exp(-c * c / (2 * v))


def _kernel(f: GaussianBump):
    return 1.0, f.center, f.width**2


def heat_pairing(f: GaussianBump, t: float, s2: float) -> float:
    """<N(0, s2), P_t f> for the heat semigroup generated by 1/2 Delta."""
    return _against_normal(_heat(_kernel(f), t), s2)


def two_particle_dual_value(f: GaussianBump, g: GaussianBump, t: float, tau: float, s2: float) -> float:
    """<X0^{M_t}, Z_t> when the two particles merge at time tau (no merge if tau >= t)."""
    if tau >= t:
        return heat_pairing(f, t, s2) * heat_pairing(g, t, s2)
    k1, c1, v1 = _heat(_kernel(f), tau)
    k2, c2, v2 = _heat(_kernel(g), tau)
    prod = (k1 * k2 * math.exp(-((c1 - c2) ** 2) / (2 * (v1 + v2))),
            (c1 * v2 + c2 * v1) / (v1 + v2), v1 * v2 / (v1 + v2))
    return _against_normal(_heat(prod, t - tau), s2)


def two_particle_dual_samples(f: GaussianBump, g: GaussianBump, t: float, s2: float, rate: float,
                              samples: int, seed: int = 0) -> np.ndarray:
    """Monte Carlo samples of the two-particle dual with coalescence at ``rate``."""
    rng = path_rng(seed, 0)
    taus = rng.exponential(1.0 / rate, size=samples) if rate > 0 else np.full(samples, math.inf)
    return np.array([two_particle_dual_value(f, g, t, tau, s2) for tau in taus])
