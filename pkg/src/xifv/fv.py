"""Forward simulation of the (Xi, A)-Fleming-Viot process on E = {0..d-1}.

Between jump times the state follows the Wright-Fisher diffusion with
mutation drift (Euler-Maruyama, projected back to the simplex).  At the
times of a Poisson clock a fraction z_i of the population is replaced by
the type of a parent drawn from the current state:

    p <- sum_i z_i * e_{parent_i} + (1 - sum_i z_i) * p
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from ._rng import as_rng, path_rng
from .dual import MCEstimate, MutationGenerator, dual_moment_samples, pair
from .measures import XiMeasure, _quad

SIMPLEX_TOL = 1e-12
CHUNK = 25_000


class InfiniteRateError(ValueError):
    """The jump part of the measure has infinite total rate and no truncation was given."""


@dataclass
class FVState:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if (p < -SIMPLEX_TOL).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"not a probability vector: {p}")
        self.p = project_simplex(p)

    @property
    def d(self) -> int:
        return len(self.p)


@dataclass
class JumpEvent:
    time: float
    z: np.ndarray
    parents: np.ndarray

    def __post_init__(self):
        self.z = np.atleast_1d(np.asarray(self.z, dtype=float))
        self.parents = np.atleast_1d(np.asarray(self.parents, dtype=int))
        if len(self.z) != len(self.parents):
            raise ValueError("one parent per weight")
        if (self.z < 0).any() or self.z.sum() > 1 + SIMPLEX_TOL:
            raise ValueError(f"jump weights outside the simplex: {self.z}")


def project_simplex(p: np.ndarray) -> np.ndarray:
    """Clip negatives to zero and renormalize (last axis)."""
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=-1, keepdims=True)


def wright_fisher_noise(p: np.ndarray, sigma2: float, dt: float, rng) -> np.ndarray:
    """Gaussian increment with covariance sigma2 * (diag p - p p^T) * dt.

    Uses xi_i = sigma (sqrt(p_i) W_i - p_i sum_j sqrt(p_j) W_j), W ~ N(0, dt).
    """
    sq = np.sqrt(np.clip(p, 0.0, None))
    w = rng.standard_normal(p.shape) * math.sqrt(dt)
    sw = (sq * w).sum(axis=-1, keepdims=True)
    return math.sqrt(sigma2) * (sq * w - p * sw)


def step_diffusion(x: FVState, A: MutationGenerator, sigma2: float, dt: float, rng) -> FVState:
    """One Euler-Maruyama step of the Wright-Fisher SDE with mutation drift A^T p."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng = as_rng(rng)
    p = x.p
    new = p + (A.Q.T @ p) * dt
    if sigma2 > 0:
        new = new + wright_fisher_noise(p, sigma2, dt, rng)
    return FVState(project_simplex(new))


def apply_jump(x: FVState, e: JumpEvent) -> FVState:
    """sum_i z_i delta_{parent_i} + (1 - sum z) x."""
    p = (1.0 - e.z.sum()) * x.p
    for z, par in zip(e.z, e.parents):
        if not 0 <= par < x.d:
            raise ValueError(f"parent type {par} outside E")
        p[par] += z
    return FVState(project_simplex(p))


class JumpSampler:
    """Poisson clock and jump-size law of the multiple-collision part.

    Jumps arrive at rate int (sum z_i^2)^-1 Xi_0(dz), restricted to
    {sum z_i^2 > truncation} when a truncation level is set.  Lambda
    densities are sampled by inverse CDF from a table of cell masses.
    """

    def __init__(self, m: XiMeasure, cells: int = 4096):
        self.measure = m
        self.width = 1
        self._points = None
        fam = m.family
        if fam == "kingman":
            self.rate = 0.0
        elif fam == "delta1":
            self.rate = 1.0
            self._points = np.ones((1, 1))
            self._probs = np.ones(1)
        elif fam == "atoms":
            weights = np.array([float(w) / sum(float(c) ** 2 for c in x) for w, x in m.atoms])
            self.width = max(len(x) for _, x in m.atoms)
            pts = np.zeros((len(m.atoms), self.width))
            for i, (_, x) in enumerate(m.atoms):
                pts[i, : len(x)] = [float(c) for c in x]
            if m.truncation is not None:
                keep = (pts**2).sum(axis=1) > m.truncation
                weights, pts = weights[keep], pts[keep]
            self.rate = float(weights.sum())
            self._points = pts
            self._probs = weights / self.rate if self.rate > 0 else weights
        elif fam == "pd":
            raise NotImplementedError("forward simulation of the Poisson-Dirichlet measure is not supported")
        else:
            if m.truncation is None:
                raise InfiniteRateError(f"family {fam!r} has infinite jump rate; supply a truncation level")
            self._tabulate(cells)
        self._cum = np.cumsum(self._probs) if self._points is not None else None

    def _tabulate(self, cells):
        m = self.measure
        lo = math.sqrt(m.truncation)
        edges = np.geomspace(lo, 1.0, cells + 1)
        masses = np.empty(cells)
        for i in range(cells):
            masses[i] = _quad(lambda x: x**-2.0, m, lower=edges[i], upper=edges[i + 1])
        self.rate = float(masses.sum())
        self._edges = edges
        self._cdf = np.concatenate([[0.0], np.cumsum(masses) / self.rate])
        self._probs = masses / self.rate

    def sample(self, rng, size: int) -> np.ndarray:
        """``size`` jump vectors z, shape (size, width)."""
        if self._points is not None:
            i = np.minimum(np.searchsorted(self._cum, rng.random(size) * self._cum[-1], side="right"),
                           len(self._cum) - 1)
            return self._points[i]
        u = rng.random(size)
        x = np.interp(u, self._cdf, self._edges)
        return x[:, None]


@dataclass
class FVPath:
    times: np.ndarray
    states: np.ndarray
    jumps: list[JumpEvent] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        d = self.states.shape[1]
        lines = ["time," + ",".join(f"p{i}" for i in range(d))]
        for t, p in zip(self.times, self.states):
            lines.append(f"{t!r}," + ",".join(repr(float(v)) for v in p))
        return "\n".join(lines) + "\n"


def simulate_fv(x0, m: XiMeasure, A: MutationGenerator, horizon: float, dt: float = 1e-3,
                seed=0, record_every: int = 1) -> FVPath:
    """Single trajectory, recorded every ``record_every`` steps."""
    x = FVState(np.asarray(x0, dtype=float)).p
    sampler = JumpSampler(m)
    rng = as_rng(seed)
    sigma2 = float(m.sigma2)
    steps = int(round(horizon / dt))
    times, states, jumps = [0.0], [x.copy()], []
    QT = A.Q.T
    for k in range(steps):
        new = x + (QT @ x) * dt
        if sigma2 > 0:
            new = new + wright_fisher_noise(x, sigma2, dt, rng)
        x = project_simplex(new)
        if sampler.rate > 0:
            count = rng.poisson(sampler.rate * dt)
            for _ in range(count):
                z = sampler.sample(rng, 1)[0]
                z = z[z > 0]
                parents = rng.choice(len(x), size=len(z), p=x)
                ev = JumpEvent((k + 1) * dt, z, parents)
                x = apply_jump(FVState(x), ev).p
                jumps.append(ev)
        if (k + 1) % record_every == 0:
            times.append((k + 1) * dt)
            states.append(x.copy())
    meta = {"dt": dt, "seed": seed if isinstance(seed, int) else None, "measure": m.describe(),
            "mutation": A.describe(), "horizon": horizon}
    return FVPath(np.array(times), np.array(states), jumps, meta)


def simulate_fv_batch(x0, m: XiMeasure, A: MutationGenerator, t: float, dt: float,
                      paths: int, seed: int = 0, observe=None, observe_every: int = 0):
    """Final states of ``paths`` independent trajectories, shape (paths, d).

    Paths are advanced together in chunks; chunk c draws from the sub-stream
    keyed by (seed, c), so results do not depend on how many chunks run.
    ``observe(step, P)`` is called every ``observe_every`` steps if given.
    """
    x0 = FVState(np.asarray(x0, dtype=float)).p
    sampler = JumpSampler(m)
    sigma2 = float(m.sigma2)
    steps = int(round(t / dt))
    out = np.empty((paths, len(x0)))
    for c, start in enumerate(range(0, paths, CHUNK)):
        size = min(CHUNK, paths - start)
        rng = path_rng(seed, c)
        P = np.tile(x0, (size, 1))
        for k in range(steps):
            P = _batch_step(P, A, sigma2, dt, sampler, rng)
            if observe is not None and observe_every and (k + 1) % observe_every == 0:
                observe(k + 1, P)
        out[start:start + size] = P
    return out


def _batch_step(P, A, sigma2, dt, sampler, rng):
    new = P + (P @ A.Q) * dt
    if sigma2 > 0:
        new = new + wright_fisher_noise(P, sigma2, dt, rng)
    P = project_simplex(new)
    if sampler.rate > 0:
        counts = rng.poisson(sampler.rate * dt, size=len(P))
        k = 0
        while True:
            idx = np.nonzero(counts > k)[0]
            if len(idx) == 0:
                break
            P[idx] = _batch_jump(P[idx], sampler.sample(rng, len(idx)), rng)
            k += 1
    return P


def _batch_jump(P, Z, rng):
    d = P.shape[1]
    cum = np.cumsum(P, axis=1)
    out = P * (1.0 - Z.sum(axis=1, keepdims=True))
    rows = np.arange(len(P))
    for j in range(Z.shape[1]):
        u = rng.random(len(P)) * cum[:, -1]
        par = np.minimum((cum < u[:, None]).sum(axis=1), d - 1)
        out[rows, par] += Z[:, j]
    return project_simplex(out)


def moment_of_states(P: np.ndarray, f: np.ndarray) -> np.ndarray:
    """<p^n, f> for each row p of P."""
    v = np.broadcast_to(f, (len(P),) + f.shape)
    for _ in range(f.ndim):
        v = np.einsum("pi,pi...->p...", P, v)
    return v


@dataclass
class DualityReport:
    forward: MCEstimate
    dual: MCEstimate
    z: float
    meta: dict

    def to_json(self) -> dict:
        return {"forward": self.forward.to_json(), "dual": self.dual.to_json(), "z": self.z, **self.meta}


def z_score(a: MCEstimate, b: MCEstimate) -> float:
    diff = a.estimate - b.estimate
    se = math.hypot(a.stderr, b.stderr)
    if se == 0:
        return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)
    return diff / se


def moment_duality_check(x0, m: XiMeasure, A: MutationGenerator, n: int, f: np.ndarray, t: float,
                         paths: int, dt: float = 1e-3, seed: int = 0) -> DualityReport:
    """Compare E<X_t^n, f> from forward paths with E<x0^{M_t}, Z_t> from the dual."""
    x0 = np.asarray(x0, dtype=float)
    f = np.asarray(f, dtype=float)
    if t == 0:
        exact = pair(x0, f)
        fw = dl = MCEstimate(exact, 0.0, paths, seed)
    else:
        P = simulate_fv_batch(x0, m, A, t, dt, paths, seed)
        fw = MCEstimate.from_samples(moment_of_states(P, f), seed)
        # dual draws from a disjoint key space
        dl = MCEstimate.from_samples(dual_moment_samples(x0, n, f, m, A, t, paths, seed + 1_000_003), seed)
    meta = {"n": n, "t": t, "dt": dt, "paths": paths, "seed": seed, "x0": x0.tolist(),
            "measure": m.describe(), "mutation": A.describe()}
    return DualityReport(fw, dl, z_score(fw, dl), meta)
