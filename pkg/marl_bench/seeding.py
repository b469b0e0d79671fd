"""
Seed derivation for order-independent experiment cells.

Every random stream is keyed by a tuple of labels and numbers mixed through
numpy's SeedSequence, so a cell's stream never depends on which cells ran
before it or on which thread ran it.
"""

import struct
import zlib
from typing import Union

import numpy as np

Key = Union[int, float, str]


def _encode(part: Key) -> int:
    if isinstance(part, bool):
        return int(part)
    if isinstance(part, int):
        if part < 0:
            raise ValueError(f"seed key parts must be non-negative, got {part}")
        return part
    if isinstance(part, float):
        # IEEE-754 bit pattern, so 0.1 and 0.1000000001 never collide
        return struct.unpack("<Q", struct.pack("<d", part))[0]
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"unsupported seed key part: {part!r}")


def seed_sequence(base_seed: int, *parts: Key) -> np.random.SeedSequence:
    """SeedSequence for the stream identified by (base_seed, *parts)."""
    return np.random.SeedSequence([_encode(base_seed)] + [_encode(p) for p in parts])


def derive_seed(base_seed: int, *parts: Key) -> int:
    """A 63-bit integer seed for the stream identified by (base_seed, *parts)."""
    state = seed_sequence(base_seed, *parts).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def make_rng(base_seed: int, *parts: Key) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(base_seed, *parts))
