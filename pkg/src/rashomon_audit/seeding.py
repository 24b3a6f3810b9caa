"""Stable seed derivation.

Every random decision in a run draws from a generator seeded by
``derive_seed(master, *coordinates)`` so that any sweep cell can be
reproduced on its own, in any process, in any order.
"""
import hashlib

import numpy as np


def derive_seed(master: int, *parts) -> int:
    """Mix ``master`` and ``parts`` into a 64-bit unsigned integer."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(master),) + tuple(parts)).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def rng_for(master: int, *parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *parts))
