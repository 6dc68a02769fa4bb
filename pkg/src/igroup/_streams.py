"""Deterministic random-stream construction.

Every randomized work item (a replication, a bootstrap pass, a synthetic
data set) draws from a counter-based Philox generator keyed by the base
seed plus an integer path, e.g. ``stream(seed, case, level, rep, stage)``.
Streams are therefore independent of scheduling and worker count: any
item can be regenerated in isolation and results merged in index order.
"""

import numpy as np

# Stage tags appended to stream paths.
DATA = 0
BOOTSTRAP = 1
SELECTION = 2


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the given seed and integer path."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
