"""Counter-based random number streams.

Every consumer of randomness derives its generator from the global run seed
plus a structured key (stream id, then counters such as epoch and sample
index).  Re-creating a generator for the same key always yields the same
stream, so any part of a run can be reproduced in isolation.
"""

from __future__ import annotations

import numpy as np

# stream ids; never renumber, logs and snapshots depend on them
STREAM_MODEL_INIT = 1
STREAM_SHUFFLE = 2
STREAM_AUGMENT = 3
STREAM_ROR_SIGNS = 4
STREAM_VAL_SPLIT = 5
STREAM_SYNTH_DATA = 6
STREAM_PLANT = 7
STREAM_CUTOUT = 8
STREAM_AUX = 9


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Return a generator for (seed, key); identical arguments give identical streams."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(seq)
