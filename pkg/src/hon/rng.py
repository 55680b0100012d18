"""Counter-based random numbers.

Each draw is a pure function of ``(seed, *keys)`` built from SplitMix64
finalizers, so a walker's numbers never depend on how many other walkers ran
before it or on which thread ran it.
"""

from __future__ import annotations

import zlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def stream_key(name: str) -> int:
    """Stable integer id for a named stream."""
    return zlib.crc32(name.encode("utf-8"))


def hash_keys(seed: int, *keys) -> np.ndarray:
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(seed, dtype=np.uint64) & np.uint64(0xFFFFFFFFFFFFFFFF))
        for k in keys:
            h = _mix(h ^ np.asarray(k).astype(np.uint64))
    return h


def uniforms(seed: int, *keys) -> np.ndarray:
    """Uniform doubles in [0, 1), broadcast over the shapes of ``keys``."""
    return (hash_keys(seed, *keys) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
