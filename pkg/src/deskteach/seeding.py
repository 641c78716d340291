"""Deterministic RNG streams derived from string/int key paths.

Every stochastic component in the package draws from a stream created here,
so that (seed, purpose) pairs map to independent, platform-stable generators.
Python's builtin ``hash`` is salted per process and must not be used.
"""

from __future__ import annotations

import hashlib

import numpy as np


def entropy_words(*keys: str | int) -> list[int]:
    """Hash a key path into 8 uint32 words suitable for SeedSequence entropy."""
    h = hashlib.sha256()
    for key in keys:
        h.update(repr(key).encode("utf-8"))
        h.update(b"\x1f")
    digest = h.digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4)]


def rng_for(*keys: str | int) -> np.random.Generator:
    """A PCG64 generator keyed by an arbitrary (seed, purpose, ...) path."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy_words(*keys))))


def torch_seed_for(*keys: str | int) -> int:
    """A 63-bit torch manual seed keyed by a key path."""
    words = entropy_words(*keys)
    return (words[0] | (words[1] << 32)) & 0x7FFF_FFFF_FFFF_FFFF
