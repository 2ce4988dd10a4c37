"""SplitMix64 pseudo-random stream.

Every seeded operation in the toolkit (train-half partitioning, random
bona-fide/attack pairing, RANSAC sampling) draws from this generator so
that a (seed, input) pair replays to the identical result on any platform
or toolkit version.  The update and output functions are the reference
SplitMix64 constants; derived draws are specified exactly below so other
implementations can replicate them:

* ``next_u64``    -- state += 0x9E3779B97F4A7C15, then mix.
* ``randbelow(n)``-- floor(((next_u64 >> 11) * n) / 2**53), i.e. the top
  53 bits scaled to [0, n).
* ``shuffle``     -- Fisher-Yates from the last index down, using
  ``randbelow(i + 1)`` for position i.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        return ((self.next_u64() >> 11) * n) >> 53

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_distinct(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), drawn by rejection."""
        if k > n:
            raise ValueError("cannot sample %d distinct values from %d" % (k, n))
        chosen: list[int] = []
        seen = set()
        while len(chosen) < k:
            v = self.randbelow(n)
            if v not in seen:
                seen.add(v)
                chosen.append(v)
        return chosen
