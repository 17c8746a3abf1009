"""Portable seeded random number generation.

All sampling in the package goes through :class:`Xoshiro256`, the
xoshiro256** generator of Blackman and Vigna, seeded by expanding a 64-bit
seed with SplitMix64. Both algorithms are small, fully specified, and
produce the same stream on every platform, so layouts and synthetic
datasets can be reproduced bit-for-bit outside Python.

Derived distributions:

* ``random()``        -- 53-bit float in [0, 1): ``(next() >> 11) * 2**-53``
* ``integers(lo, hi)`` -- unbiased integer in [lo, hi] by rejection
* ``normal(mu, s)``   -- Box-Muller, cosine branch only, one pair per draw
* ``exponential(b)``  -- inversion, ``-b * log(1 - u)``
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator with explicit, copyable state."""

    __slots__ = ("s",)

    def __init__(self, seed: int):
        sm = seed & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self.s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in the closed range ``[low, high]``."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        span = high - low + 1
        if span > MASK64:
            raise ValueError("range wider than 64 bits")
        # reject the top partial block so every residue is equally likely
        limit = (MASK64 + 1) - ((MASK64 + 1) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return low + x % span

    def normal(self, mean: float = 0.0, sigma: float = 1.0) -> float:
        u1 = self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        return mean + sigma * r * math.cos(2.0 * math.pi * u2)

    def exponential(self, scale: float = 1.0) -> float:
        return -scale * math.log(1.0 - self.random())

    def choice(self, seq):
        return seq[self.integers(0, len(seq) - 1)]

    def copy(self) -> "Xoshiro256":
        g = Xoshiro256.__new__(Xoshiro256)
        g.s = list(self.s)
        return g


def derive_seed(seed: int, *keys: int) -> int:
    """Mix integer keys into a seed to get an independent stream seed."""
    state = seed & MASK64
    for k in keys:
        state, out = splitmix64(state ^ (k & MASK64))
        state = out
    return state
