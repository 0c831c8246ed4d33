"""Reproducible random-number streams.

Every stochastic routine in the package derives its randomness from a
master seed plus a tuple of integer keys (replica index, probe value,
block number, ...).  Two runs with the same seed therefore produce
identical results regardless of worker count or call order, and any
single replica can be replayed in isolation.
"""
from __future__ import annotations

import struct

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Deterministic generator for (seed, keys).

    Distinct key tuples give statistically independent streams.
    """
    entropy = [int(seed) & _MASK64] + [int(k) & _MASK64 for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def float_key(x: float) -> int:
    """Map a float to a stable 64-bit integer key (bit pattern)."""
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def mix_seed(seed: int, *keys: int) -> int:
    """Collapse (seed, keys) into a single derived 64-bit seed.

    Used where a routine wants to hand a plain integer seed to a
    sub-estimator while staying deterministic in the keys (e.g. one seed
    per probed rate, independent of probe order).
    """
    entropy = [int(seed) & _MASK64] + [int(k) & _MASK64 for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


class DrawBuffer:
    """Batched scalar draws from a numpy Generator.

    Amortizes the per-call overhead of Generator.random() /
    standard_exponential() for loops that consume draws one at a time.
    """

    __slots__ = ("_rng", "_size", "_u", "_ui", "_e", "_ei")

    def __init__(self, rng: np.random.Generator, size: int = 8192):
        self._rng = rng
        self._size = size
        self._u = rng.random(size)
        self._ui = 0
        self._e = rng.standard_exponential(size)
        self._ei = 0

    def uniform(self) -> float:
        i = self._ui
        if i >= self._size:
            self._u = self._rng.random(self._size)
            i = 0
        self._ui = i + 1
        return self._u[i]

    def exponential(self) -> float:
        i = self._ei
        if i >= self._size:
            self._e = self._rng.standard_exponential(self._size)
            i = 0
        self._ei = i + 1
        return self._e[i]
