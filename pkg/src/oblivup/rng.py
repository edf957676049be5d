"""Deterministic 64-bit mixing generator (splitmix64).

Used everywhere the toolkit needs reproducible randomness: coefficient
search, trace sampling, witness tables. The constants are fixed so streams
reproduce across platforms and backends:

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output = z ^ (z >> 31)

Bounded draws reject 64-bit outputs at or above the largest multiple of the
bound, then reduce, so every residue is exactly equally likely.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


class DetRng:
    """splitmix64 stream seeded by a 64-bit integer."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _M1) & _MASK64
        z = ((z ^ (z >> 27)) * _M2) & _MASK64
        return z ^ (z >> 31)

    def randrange(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        lim = (_MASK64 // bound) * bound
        while True:
            z = self.next_u64()
            if z < lim:
                return z % bound

    def sample_distinct(self, bound: int, count: int) -> list[int]:
        """count distinct integers in [0, bound), in draw order."""
        if count > bound:
            raise ValueError("cannot sample more distinct values than the range holds")
        seen: list[int] = []
        while len(seen) < count:
            v = self.randrange(bound)
            if v not in seen:
                seen.append(v)
        return seen
