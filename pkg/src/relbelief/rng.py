"""Deterministic random substreams for Monte Carlo work.

Every stochastic routine in the package draws from a counter-based Philox
stream keyed by ``(seed, role, *path)``.  Replications are laid out by array
index inside a stream, so estimates are identical whether the work is done
serially, vectorized, or split across threads, and independent tasks never
share a stream.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _encode(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"substream path parts must be int or str, got {type(part)!r}")


def stream_key(seed: int, *path) -> int:
    """Collapse a seed and a path of identifiers into one 64-bit stream key."""
    h = _encode(seed)
    for part in path:
        h = _splitmix64(h ^ _encode(part))
    return h


def substream(seed: int, *path) -> np.random.Generator:
    """Return an independent generator for the task identified by ``path``.

    The mapping from (seed, path) to the stream is fixed: the same inputs
    always produce the same draws, regardless of how many other substreams
    were created or in what order.
    """
    key = np.array([_encode(seed), stream_key(seed, *path)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
