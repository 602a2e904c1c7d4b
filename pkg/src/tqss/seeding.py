"""Reproducible random streams.

Every random draw in a run comes from one numpy Generator. Independent runs
get child seeds from a stable 64-bit hash so trials can be scheduled in any
order or process and still draw identical numbers.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def child_seed(master_seed: int, index: int) -> int:
    """First 8 bytes (big-endian) of SHA-256 over b"tqss-child|<master>|<index>"."""
    msg = f"tqss-child|{int(master_seed) & MASK64}|{int(index)}".encode("ascii")
    return int.from_bytes(hashlib.sha256(msg).digest()[:8], "big")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
