"""Deterministic random-stream derivation.

Every stochastic component draws from its own named substream derived from
the run's root seed, so adding a consumer never perturbs the draws seen by
another.  String keys are hashed with SHA-256 (stable across processes,
unlike ``hash``).
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    return int(key) & _MASK64


def substream(root_seed: int, *keys: int | str) -> np.random.Generator:
    """Return a numpy Generator for the substream named by ``keys``."""
    entropy = [int(root_seed) & _MASK64] + [_key_to_int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(root_seed: int, *keys: int | str) -> int:
    """Return a 63-bit integer seed for consumers that need a scalar seed.

    Used to seed torch generators from the same naming scheme as
    :func:`substream`.
    """
    entropy = [int(root_seed) & _MASK64] + [_key_to_int(k) for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
