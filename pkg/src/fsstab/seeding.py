"""Counter-based seed derivation.

A derived seed depends only on the master seed and a path of keys (strings
or integers), never on how many other seeds were drawn before it. Adding a
ranker to a study therefore leaves every existing run's seed untouched.
"""
import zlib

import numpy as np

from .errors import ConfigError


def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        return int(k) & 0xFFFFFFFF
    return zlib.crc32(str(k).encode("utf-8"))


def derive_seed(master, *path) -> int:
    if int(master) < 0:
        raise ConfigError(f"seeds must be non-negative, got {master}")
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(_key(k) for k in path))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
