"""Named, seeded random streams.

A stream is keyed by the master seed plus a tuple of names/indices, so the
draws for a given chunk of pulses never depend on which worker runs it.
"""

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def stream(seed: int, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(_key_part(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
