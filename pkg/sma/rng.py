"""
Counter-based random streams.

Replicate ``r`` of seed ``s`` always sees the same stream, whatever order or
thread the replicates run in.
"""

import numpy as np


def replicate_generator(seed, replicate=0):
    """Return the Philox generator owned by (seed, replicate)"""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))
    return np.random.Generator(np.random.Philox(sequence))


def stream_generator(seed, stream):
    """Generator for an auxiliary named stream (GRF draws, synthetic checks)"""
    # auxiliary streams live in a separate spawn-key namespace from replicates
    sequence = np.random.SeedSequence(int(seed), spawn_key=(2**32 + int(stream),))
    return np.random.Generator(np.random.Philox(sequence))
