"""Counter-based deterministic random generator (SplitMix64).

Every draw is ``mix(seed + k * GAMMA)`` for the k-th call, so the stream is a
pure function of (seed, counter) and reproduces bit-for-bit on any platform.
Constants are the standard SplitMix64 ones (Steele, Lea & Flood 2014).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# 53-bit mantissa: (u64 >> 11) * 2**-53 is uniform on [0, 1)
_INV_2_53 = 1.0 / (1 << 53)


class Rng:
    """Deterministic generator; identical seed gives an identical stream."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self.counter = 0

    def _block(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs, advancing the counter by n."""
        ks = self.counter + np.arange(n, dtype=np.uint64)
        self.counter += n
        z = (np.uint64(self.seed) + ks * np.uint64(_GAMMA))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def next_u64(self) -> int:
        return int(self._block(1)[0])

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * ((self.next_u64() >> 11) * _INV_2_53)

    def uniform_array(self, shape, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
        n = int(np.prod(shape))
        u = (self._block(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return (lo + (hi - lo) * u).reshape(shape)

    def below(self, n: int) -> int:
        """Integer in [0, n). Modulo bias is < n / 2**64, negligible here."""
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        return self.next_u64() % n

    def choice(self, seq):
        return seq[self.below(len(seq))]
