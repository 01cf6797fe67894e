"""
Keyed random streams.

Every draw in the simulator comes from a generator built from a key
(seed, tag, ...). The same key always yields the same generator, so a frame
is a pure function of its arguments no matter which thread captures it or in
which order.
"""
import numpy as np

FPN_STREAM = 1
READ_STREAM = 2
PHASE_STREAM = 3


def keyed_generator(seed, tag, *key):
    """
    Builds a generator from a (seed, tag, *key) stream key.

    Args:
        seed (int): Sensor seed, unsigned 64-bit.
        tag (int): One of the *_STREAM constants.
        *key (int): Further unsigned integers (run seed, step index, frame index).

    Returns:
        np.random.Generator: A fresh PCG64 generator for that key.
    """
    # Key length is mixed in: SeedSequence pads short entropy with zeros, so
    # (s, t, 5) and (s, t, 5, 0) would otherwise collide.
    entropy = [int(seed), int(tag), len(key), *(int(k) for k in key)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
