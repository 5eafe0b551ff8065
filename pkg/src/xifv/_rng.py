import numpy as np


def path_rng(seed, index: int) -> np.random.Generator:
    """Independent generator for path ``index`` of a run seeded with ``seed``.

    Equivalent to ``SeedSequence(seed).spawn(...)[index]`` without spawning
    the preceding children, so any path can be replayed on its own.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
