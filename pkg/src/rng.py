"""
Deterministic xorshift64* generator with splitmix64 seeding.

The generator is fixed so that test corpora are reproducible bit for bit:

    x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27      (mod 2**64)
    output = x * 0x2545F4914F6CDD1D                  (mod 2**64)

Seeds pass through splitmix64 before use (a zero state is replaced by a
constant). Floats take the top 53 output bits. Independent streams come from
``split_seed(seed, index)``.
"""
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
XORSHIFT_MULTIPLIER = 0x2545F4914F6CDD1D
_ZERO_STATE_REPLACEMENT = 0x853C49E6748FEA9B


def splitmix64(value: int) -> int:
    """One splitmix64 finalisation step."""
    z = (value + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def split_seed(seed: int, index: int) -> int:
    """Seed of the independent stream number ``index`` derived from ``seed``."""
    return splitmix64((seed + (index + 1) * GOLDEN_GAMMA) & MASK64)


class Xorshift64Star:
    """xorshift64* pseudo-random generator."""

    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        self.state = state if state != 0 else _ZERO_STATE_REPLACEMENT

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * XORSHIFT_MULTIPLIER) & MASK64

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float, size: int) -> np.ndarray:
        return np.array([low + (high - low) * self.random() for _ in range(size)], dtype=float)

    def integer(self, upper: int) -> int:
        """Integer in [0, upper)."""
        return int(self.random() * upper) % upper

    def index(self, periods: Sequence[int]) -> tuple:
        """Multi-index drawn uniformly from the box with the given periods."""
        return tuple(self.integer(q) for q in periods)

    def unit_complex(self, size: int) -> np.ndarray:
        """Points drawn uniformly on the unit circle."""
        angles = self.uniform(0.0, 2.0 * np.pi, size)
        return np.exp(1j * angles)
