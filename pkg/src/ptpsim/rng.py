"""Seeded random streams.

Every stochastic source in a run (an oscillator, one direction of a link, a
fading process) owns its own stream. Streams are derived from the scenario
seed plus a key tuple, so adding a new source never shifts the draws of an
existing one.

Splitting rule: the key parts are mapped to 32-bit integers (ints as-is,
strings via CRC-32 of their UTF-8 bytes) and passed, after the seed, as the
entropy of a :class:`numpy.random.SeedSequence`.
"""

from __future__ import annotations

import zlib
from functools import partial
from itertools import chain

import numpy as np

_BATCH = 4096


def _key_word(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError(f"negative stream key part: {part}")
    return int(part)


class RandomStream:
    """Buffered normal/uniform/exponential draws from one PCG64 generator."""

    __slots__ = ("_gen", "normal", "_exps", "_epos", "key")

    def __init__(self, seed: int, *key: int | str) -> None:
        entropy = [_key_word(seed), *(_key_word(k) for k in key)]
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
        # normal() is next() over lazily drawn batches; the hot path has no Python frame
        batches = iter(lambda: self._gen.standard_normal(_BATCH).tolist(), None)
        self.normal = partial(next, chain.from_iterable(batches))
        self._exps: list[float] = []
        self._epos = 0
        self.key = (seed, *key)

    def exponential(self, mean: float) -> float:
        """Exponential draw with the given mean (0 for a non-positive mean)."""
        if mean <= 0.0:
            return 0.0
        if self._epos >= len(self._exps):
            self._exps = self._gen.standard_exponential(_BATCH).tolist()
            self._epos = 0
        v = self._exps[self._epos]
        self._epos += 1
        return mean * v

    def uniform(self, low: float, high: float) -> float:
        return float(self._gen.uniform(low, high))
