"""SplitMix64, the only random source in the package.

Output ``i`` (0-based) of a generator seeded with ``s`` is
``mix(s + (i + 1) * GOLDEN)`` modulo 2**64, so any block of the stream can be
computed directly; ``stream`` does that with wrapping numpy uint64 arithmetic.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return _mix(self.state)

    def bounded(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - n) % n
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % n

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def stream(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of the generator seeded with ``seed``."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(int(seed) & MASK64) + idx * np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def uniform_stream(seed: int, start: int, count: int) -> np.ndarray:
    return (stream(seed, start, count) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def normal_stream(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normals by Box-Muller; normal ``i`` consumes outputs ``2i`` and ``2i+1``."""
    u = uniform_stream(seed, 2 * start, 2 * count)
    u1, u2 = u[0::2], u[1::2]
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def derive_seed(seed: int, *salt: int) -> int:
    """Independent child seed for a numbered sub-stream."""
    s = int(seed) & MASK64
    for k in salt:
        s = _mix((s ^ _mix((int(k) + 1) * GOLDEN & MASK64)) & MASK64)
    return s
