"""Seeded random streams.

Every stream is a Philox4x64 counter-based generator keyed by a
``numpy.random.SeedSequence``.  Substreams are addressed by a tuple of
non-negative integers (for example ``(replicate, feature)``) through the
seed sequence's ``spawn_key``, so a given address always yields the same
draws regardless of the order in which streams are created or of how work
is spread over threads.
"""
import numpy as np


def substream(seed, *key):
    """Return the generator addressed by ``(seed, *key)``."""
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError("seed and stream keys must be non-negative integers")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# leading stream keys, so that draws for different purposes never overlap
DATA = 0
SPLIT = 1
TRAIN_TEST = 2
SPLIT_SEED = 3


def derived_seed(seed, *key):
    """A 63-bit integer seed drawn from the stream at ``(seed, *key)``."""
    return int(substream(seed, *key).integers(2**63 - 1))
