"""
Tests for the seeded random streams.
"""

import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.exceptions import InvalidParameterError
from core.rng import SeededRng, STREAM_INIT, STREAM_TRAIN, STREAM_VAL


class TestSeededRng(unittest.TestCase):
    """Test cases for stream derivation and reproducibility."""

    def test_same_seed_same_samples(self):
        """Test that equal seeds give equal sequences and different seeds differ."""
        a, b, c = SeededRng(5), SeededRng(5), SeededRng(6)
        np.testing.assert_array_equal(a.random(8), b.random(8))
        self.assertFalse(np.array_equal(SeededRng(5).random(8), c.random(8)))

    def test_child_matches_derive(self):
        """Test that child keys append to the parent's keys."""
        parent = SeededRng.derive(3, STREAM_TRAIN)
        parent.random(4)
        child = parent.child(7)
        self.assertEqual(child.keys, (STREAM_TRAIN, 7))
        np.testing.assert_array_equal(child.normal(size=5),
                                      SeededRng.derive(3, STREAM_TRAIN, 7).normal(size=5))

    def test_streams_independent(self):
        """Test that the init, train and val streams of one seed differ."""
        draws = [SeededRng.derive(0, key).integers(0, 2 ** 31, size=4).tolist()
                 for key in (STREAM_INIT, STREAM_TRAIN, STREAM_VAL)]
        self.assertEqual(len({tuple(d) for d in draws}), 3)

    def test_spawn_seed(self):
        """Test that spawned seeds are reproducible 64-bit values that seed new streams."""
        first = SeededRng(9).spawn_seed()
        self.assertEqual(first, SeededRng(9).spawn_seed())
        self.assertTrue(0 <= first < 2 ** 64)
        np.testing.assert_array_equal(SeededRng(first).random(3), SeededRng(first).random(3))

    def test_invalid_seed(self):
        """Test rejection of negative, oversized and non-integer seeds."""
        for seed in (-1, 2 ** 64, 1.5, "7"):
            with self.assertRaises(InvalidParameterError):
                SeededRng(seed)


if __name__ == '__main__':
    unittest.main()
