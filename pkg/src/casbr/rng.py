"""Reproducible random streams.

Every stochastic routine takes an :class:`RngSeed` rather than a generator so
that a given (master seed, stream) pair always produces the same draws, no
matter which process or thread consumes it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngSeed:
    master_seed: int
    stream_index: int = 0
    # extra path components appended by child(); empty for a top-level stream
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.stream_index < 0 or any(k < 0 for k in self.path):
            raise ValueError("stream indices must be nonnegative")

    @property
    def key(self) -> tuple[int, ...]:
        return (self.stream_index, *self.path)

    def child(self, *keys: int) -> "RngSeed":
        """Derive an independent sub-stream, e.g. ``seed.child(rep, design, sim)``."""
        return RngSeed(self.master_seed, self.stream_index, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))


def as_seed(seed) -> RngSeed:
    """Accept an RngSeed or a bare integer master seed."""
    if isinstance(seed, RngSeed):
        return seed
    return RngSeed(int(seed))
