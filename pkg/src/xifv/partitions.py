"""Partition algebra and the Xi-coalescent restricted to [n]."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from ._rng import as_rng, path_rng
from .measures import CollisionSignature, XiMeasure, lambda_rate

MAX_N = 8


@dataclass(frozen=True)
class Partition:
    """Partition of {1..n} with blocks ordered by their least element."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        if any(len(b) == 0 for b in blocks):
            raise ValueError("partition has an empty block")
        blocks = tuple(sorted(blocks, key=lambda b: b[0]))
        flat = [i for b in blocks for i in b]
        if sorted(flat) != list(range(1, len(flat) + 1)):
            raise ValueError(f"blocks do not partition {{1..{len(flat)}}}: {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(1, n + 1)))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Partition from block labels: element i+1 goes to block labels[i]."""
        groups: dict[int, list[int]] = {}
        for i, lab in enumerate(labels, start=1):
            groups.setdefault(lab, []).append(i)
        return cls(tuple(tuple(g) for g in groups.values()))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def block_of(self) -> list[int]:
        """0-based block index of each element 1..n."""
        out = [0] * self.n
        for k, b in enumerate(self.blocks):
            for i in b:
                out[i - 1] = k
        return out

    def restrict(self, n: int) -> "Partition":
        blocks = [tuple(i for i in b if i <= n) for b in self.blocks]
        return Partition(tuple(b for b in blocks if b))

    def to_list(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]

    def __str__(self):
        return "{" + ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"


def set_partitions(n: int) -> Iterator[Partition]:
    """All partitions of {1..n} (restricted growth strings, Bell(n) of them)."""
    if n == 0:
        return
    labels = [0] * n

    def rec(i, top):
        if i == n:
            yield Partition.from_labels(labels)
            return
        for lab in range(top + 2):
            labels[i] = lab
            yield from rec(i + 1, max(top, lab))

    yield from rec(1, 0)


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def coag(p: Partition, q: Partition) -> Partition:
    """Coagulate the blocks of ``p`` as directed by ``q``.

    Block j of the result is the union of the blocks p_i with i in q_j.  ``q``
    may partition a larger index set than ``len(p)``; surplus indices are
    ignored.
    """
    if q.n < len(p):
        raise ValueError(f"q partitions {{1..{q.n}}} but p has {len(p)} blocks")
    out = []
    for qb in q.blocks:
        merged = [i for k in qb if k <= len(p) for i in p.blocks[k - 1]]
        if merged:
            out.append(tuple(merged))
    return Partition(tuple(out))


def signature_of(q: Partition) -> CollisionSignature | None:
    """Collision signature of coagulator ``q``; None for the identity."""
    ks = sorted((len(b) for b in q.blocks if len(b) >= 2), reverse=True)
    if not ks:
        return None
    return CollisionSignature.of(ks, sum(1 for b in q.blocks if len(b) == 1))


def coagulator(before: Partition, after: Partition) -> Partition:
    """The partition q of the block indices of ``before`` with after = coag(before, q)."""
    if before.n != after.n:
        raise ValueError("partitions of different ground sets")
    where = before.block_of()
    groups = []
    for ab in after.blocks:
        idx = sorted({where[i - 1] + 1 for i in ab})
        if sum(len(before.blocks[k - 1]) for k in idx) != len(ab):
            raise ValueError(f"{after} is not a coagulation of {before}")
        groups.append(tuple(idx))
    return Partition(tuple(groups))


def classify_collision(before: Partition, after: Partition) -> CollisionSignature:
    """Signature (b; k1..kr; s) of the merger taking ``before`` to ``after``."""
    sig = signature_of(coagulator(before, after))
    if sig is None:
        raise ValueError("no merger took place")
    return sig


@dataclass
class CoalescentPath:
    times: list[float] = field(default_factory=list)
    states: list[Partition] = field(default_factory=list)
    signatures: list[CollisionSignature] = field(default_factory=list)

    @property
    def absorption_time(self) -> float:
        """Time of reaching a single block (inf if not reached within horizon)."""
        if len(self.states[-1]) == 1:
            return self.times[-1] if self.times else 0.0
        return math.inf

    def restrict(self, n: int) -> "CoalescentPath":
        """Path seen on {1..n}; jumps invisible on the restriction are dropped."""
        out = CoalescentPath(states=[self.states[0].restrict(n)])
        for t, st in zip(self.times, self.states[1:]):
            r = st.restrict(n)
            if len(r) < len(out.states[-1]):
                out.signatures.append(classify_collision(out.states[-1], r))
                out.times.append(t)
                out.states.append(r)
        return out

    def to_jsonl(self) -> str:
        lines = [json.dumps({"time": 0.0, "signature": None, "blocks": self.states[0].to_list()})]
        for t, sig, st in zip(self.times, self.signatures, self.states[1:]):
            lines.append(json.dumps({"time": t, "signature": str(sig), "blocks": st.to_list()}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "CoalescentPath":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        path = cls(states=[Partition(tuple(map(tuple, rows[0]["blocks"])))])
        for row in rows[1:]:
            path.times.append(row["time"])
            path.signatures.append(CollisionSignature.parse(row["signature"]))
            path.states.append(Partition(tuple(map(tuple, row["blocks"]))))
        return path


class TransitionTable:
    """All nontrivial coagulators of b blocks with their rates under a measure."""

    def __init__(self, m: XiMeasure, b: int):
        self.b = b
        self.coagulators: list[Partition] = []
        self.sigs: list[CollisionSignature] = []
        rates = []
        cache: dict[CollisionSignature, float] = {}
        for q in set_partitions(b):
            sig = signature_of(q)
            if sig is None:
                continue
            if sig not in cache:
                cache[sig] = float(lambda_rate(m, sig))
            if cache[sig] > 0:
                self.coagulators.append(q)
                self.sigs.append(sig)
                rates.append(cache[sig])
        self.rates = np.array(rates)
        self.total = float(self.rates.sum()) if rates else 0.0
        self.probs = self.rates / self.total if self.total > 0 else self.rates
        self.cum = np.cumsum(self.probs)

    def sample(self, rng: np.random.Generator) -> int:
        i = int(np.searchsorted(self.cum, rng.random() * self.cum[-1], side="right"))
        return min(i, len(self.cum) - 1)


_TABLES: dict = {}


def transition_table(m: XiMeasure, b: int) -> TransitionTable:
    key = (m, id(m.density), b)
    tab = _TABLES.get(key)
    if tab is None:
        tab = _TABLES[key] = TransitionTable(m, b)
    return tab


def simulate_coalescent(n: int, m: XiMeasure, horizon: float = math.inf, seed=0,
                        max_n: int = MAX_N, initial: Partition | None = None) -> CoalescentPath:
    """One trajectory of the Xi-coalescent on {1..n} up to ``horizon``.

    Holding times are exponential with the total rate of the current block
    count; the next coagulation is drawn from all set partitions of the
    current blocks in proportion to their collision rates.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > max_n:
        raise ValueError(f"n={n} exceeds the enumeration cap {max_n}")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    rng = as_rng(seed)
    state = initial if initial is not None else Partition.singletons(n)
    path = CoalescentPath(states=[state])
    t = 0.0
    while len(state) > 1:
        tab = transition_table(m, len(state))
        if tab.total <= 0:
            break
        t += rng.exponential(1.0 / tab.total)
        if t > horizon:
            break
        i = tab.sample(rng)
        state = coag(state, tab.coagulators[i])
        path.times.append(t)
        path.states.append(state)
        path.signatures.append(tab.sigs[i])
    return path


def simulate_block_counts(n: int, m: XiMeasure, horizon: float, rng: np.random.Generator):
    """Lightweight variant used by the dual: yields (time, coagulator) jumps."""
    b = n
    t = 0.0
    while b > 1:
        tab = transition_table(m, b)
        if tab.total <= 0:
            return
        t += rng.exponential(1.0 / tab.total)
        if t > horizon:
            return
        q = tab.coagulators[tab.sample(rng)]
        yield t, q
        b = len(q)


def absorption_times(n: int, m: XiMeasure, paths: int, seed=0) -> np.ndarray:
    return np.array([simulate_coalescent(n, m, seed=path_rng(seed, i)).absorption_time for i in range(paths)])


def first_jump_law(n: int, m: XiMeasure) -> dict[CollisionSignature, float]:
    """Probability that the first merger from singletons has each signature."""
    tab = transition_table(m, n)
    out: dict[CollisionSignature, float] = {}
    for sig, p in zip(tab.sigs, tab.probs):
        out[sig] = out.get(sig, 0.0) + float(p)
    return out


def count_coagulators(b: int) -> dict[CollisionSignature, int]:
    """Number of coagulators of b blocks with each signature."""
    out: dict[CollisionSignature, int] = {}
    for q in set_partitions(b):
        sig = signature_of(q)
        if sig is not None:
            out[sig] = out.get(sig, 0) + 1
    return out


@lru_cache(maxsize=None)
def count_by_signature(b: int) -> tuple:
    return tuple(sorted(count_coagulators(b).items()))
