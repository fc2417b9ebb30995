"""Seeded pseudo-random generator with a bit-exact, portable definition.

The generator is SplitMix64: the 64-bit state advances by the golden-ratio
increment 0x9E3779B97F4A7C15 and each output is a mix of the new state.
Uniform doubles take the top 53 bits of an output word (offset by 0.5 so
values lie strictly inside (0, 1)); standard-normal variates come from the
Box-Muller transform, each consuming exactly two raw words (u1 then u2,
no caching of the second deviate). Given a seed, the draw sequence is
identical across platforms and runs.
"""

from __future__ import annotations

import math

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / (1 << 53)


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class Prng:
    """SplitMix64 stream; identical seeds yield identical streams."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        return _mix(self.state)

    def next_f64(self) -> float:
        """Uniform double in the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * _INV_2_53

    def next_gaussian(self) -> float:
        """Standard-normal deviate via Box-Muller (consumes two words)."""
        u1 = self.next_f64()
        u2 = self.next_f64()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def next_index(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.next_f64() * n), n - 1)

    def fill_gaussian(self, shape: tuple[int, ...]) -> np.ndarray:
        """float32 array of standard normals, vectorized.

        Bit-compatible with repeated next_gaussian() calls: draw i consumes
        raw words 2i and 2i+1 of the stream.
        """
        count = int(np.prod(shape)) if shape else 1
        words = self._u64_block(2 * count)
        u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
        u1, u2 = u[0::2], u[1::2]
        out = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return out.astype(np.float32).reshape(shape)

    def _u64_block(self, count: int) -> np.ndarray:
        base = np.uint64(self.state)
        steps = (np.arange(1, count + 1, dtype=np.uint64)) * np.uint64(_GOLDEN)
        with np.errstate(over="ignore"):
            z = base + steps  # wraps mod 2^64, matching scalar advance
            self.state = int(z[-1]) if count else self.state
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        return z
