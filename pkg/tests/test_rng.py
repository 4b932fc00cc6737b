"""Tests for the deterministic generator."""
import sys
from pathlib import Path

import numpy as np

# Add project root to path and import as package
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.rng import MASK64, Xorshift64Star, split_seed, splitmix64


class TestXorshift64Star:
    """Test cases for Xorshift64Star."""

    def test_same_seed_same_stream(self):
        """Test that a seed fixes the whole stream."""
        a, b = Xorshift64Star(7), Xorshift64Star(7)
        assert [a.next_u64() for _ in range(20)] == [b.next_u64() for _ in range(20)]

    def test_different_seeds_differ(self):
        """Distinct seeds give distinct streams."""
        assert Xorshift64Star(1).next_u64() != Xorshift64Star(2).next_u64()

    def test_zero_seed_is_usable(self):
        """Seed 0 does not stall the generator."""
        rng = Xorshift64Star(0)
        assert rng.state != 0
        assert 0 <= rng.next_u64() <= MASK64

    def test_random_range(self):
        """Floats fall in [0, 1)."""
        rng = Xorshift64Star(11)
        values = [rng.random() for _ in range(1000)]
        assert min(values) >= 0.0
        assert max(values) < 1.0

    def test_uniform_and_integer(self):
        """uniform and integer respect their bounds."""
        rng = Xorshift64Star(3)
        draws = rng.uniform(-2.0, 5.0, 500)
        assert draws.shape == (500,)
        assert np.all((draws >= -2.0) & (draws < 5.0))
        assert all(0 <= rng.integer(6) < 6 for _ in range(200))

    def test_index_and_unit_complex(self):
        """Indices are canonical and unit_complex lies on the circle."""
        rng = Xorshift64Star(5)
        assert all(0 <= n < q for n, q in zip(rng.index((2, 3, 4)), (2, 3, 4)))
        np.testing.assert_allclose(np.abs(rng.unit_complex(10)), 1.0)


class TestSeedSplitting:
    """Test cases for independent streams."""

    def test_split_seeds_distinct(self):
        """Split seeds of one parent differ."""
        seeds = {split_seed(7, i) for i in range(100)}
        assert len(seeds) == 100

    def test_split_seed_deterministic(self):
        """Splitting is a pure function."""
        assert split_seed(7, 3) == split_seed(7, 3)
        assert split_seed(7, 3) != split_seed(8, 3)

    def test_splitmix64_stays_in_range(self):
        """Outputs stay within 64 bits."""
        assert 0 <= splitmix64(MASK64) <= MASK64
