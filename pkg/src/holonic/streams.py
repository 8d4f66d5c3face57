"""Per-purpose random streams derived from one root seed.

Every consumer asks for its own generator keyed by ``(seed, purpose, *keys)``,
so adding a new diagnostic draw never shifts the numbers seen elsewhere.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def stream(seed: int, purpose: str, *keys: int) -> np.random.Generator:
    """Independent generator for ``purpose`` at the integer coordinates ``keys``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    spawn_key = (_tag(purpose),) + tuple(int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn_key))


def child(rng: np.random.Generator, *keys: int) -> np.random.Generator:
    """Deterministic sub-stream of ``rng`` that does not advance ``rng`` itself.

    Used to hand disjoint streams to per-holon / per-agent work so results do
    not depend on evaluation order.
    """
    seq = rng.bit_generator.seed_seq
    if not isinstance(seq, np.random.SeedSequence):
        raise TypeError("generator was not built from a SeedSequence")
    spawn_key = tuple(seq.spawn_key) + tuple(int(k) for k in keys)
    return np.random.default_rng(
        np.random.SeedSequence(seq.entropy, spawn_key=spawn_key, pool_size=seq.pool_size)
    )
