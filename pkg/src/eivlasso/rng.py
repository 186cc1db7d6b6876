"""Seed derivation and generator construction.

Every random stream is a Philox (counter-based) generator keyed by a
``numpy.random.SeedSequence`` built from ``(master_seed, tag, *indices)``.
Tags are hashed with BLAKE2b so that the derivation is stable across Python
processes (``hash()`` on strings is salted and must not be used here).
"""

import hashlib
import json

import numpy as np

_MASK64 = (1 << 64) - 1


def stable_hash(obj):
    """64-bit hash of a JSON-serialisable object, stable across runs."""
    payload = json.dumps(obj, sort_keys=True, default=repr).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def derive_seed(master_seed, tag, *indices):
    """Child seed for stream ``tag`` with optional integer/tuple indices."""
    return stable_hash([int(master_seed) & _MASK64, str(tag), list(indices)])


def generator(seed, tag=None):
    """Philox generator for ``seed`` (optionally split by a purpose tag)."""
    words = [int(seed) & _MASK64]
    if tag is not None:
        words.append(stable_hash(str(tag)))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
