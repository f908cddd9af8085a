"""Keyed random substreams.

Every random draw in the package comes from a generator derived from a master
seed plus a tuple of integer keys (purpose, step, particle, ...).  Results do
not depend on the order in which substreams are created, so runs are
reproducible regardless of how work is scheduled across threads.
"""

import numpy as np

# purpose codes; append only, never renumber
INIT_THETA = 0
INIT_OMEGA = 1
SGD_LATENT = 2
SGD_TARGET = 3
QUAD_LATENT = 4
QUAD_TARGET = 5
SAMPLING = 6


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, *keys)``."""
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seed and keys must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))
