"""Deterministic random-stream derivation.

Every random draw in this package comes from a substream derived from a user
seed plus a tuple of tags (strings or small integers). Substreams are
independent of each other and of how many sibling streams exist, so per-step
matrices do not change when the horizon grows and adding a policy never
perturbs another policy's draws.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_to_int(tag: int | str) -> int:
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError(f"stream tags must be non-negative, got {tag}")
        return int(tag)
    if isinstance(tag, str):
        digest = hashlib.sha256(tag.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream tag must be int or str, got {type(tag).__name__}")


def seed_sequence(seed: int, *tags: int | str) -> np.random.SeedSequence:
    """Build the SeedSequence for substream (seed, *tags)."""
    if not isinstance(seed, (int, np.integer)):
        raise TypeError("seed must be an integer")
    return np.random.SeedSequence(
        entropy=int(seed) & _MASK64,
        spawn_key=tuple(_tag_to_int(t) for t in tags),
    )


def substream(seed: int, *tags: int | str) -> np.random.Generator:
    """Seeded generator for the substream identified by (seed, *tags)."""
    return np.random.default_rng(seed_sequence(seed, *tags))


def derive_seed(seed: int, *tags: int | str) -> int:
    """Derive a child 64-bit seed, e.g. a per-trial seed from a master seed."""
    words = seed_sequence(seed, *tags).generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)
