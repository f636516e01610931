"""Counter-based random streams keyed by (master seed, replicate, ...)."""
import numpy as np


def replicate_rng(seed, *key):
    """Philox generator for the stream identified by ``key`` under ``seed``.

    The stream only depends on the key, never on how many other streams
    were drawn before it, so replicates can run in any order or process.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return replicate_rng(seed)


def seed_label(seed):
    """JSON-friendly record of a seed argument (None for live generators)."""
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return None
