import numpy as np


def child_seed(seed, index):
    """Derive an independent 64-bit seed for stream ``index`` of master ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed, *path):
    """Generator for the stream identified by ``seed`` and an index path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in path))
    return np.random.default_rng(ss)
