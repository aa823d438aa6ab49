"""
Seeded random streams.
Every stochastic operation in TeraForge draws from a SeededRng so runs are
reproducible from their seeds alone.
"""

from typing import Optional, Tuple

import numpy as np

from .exceptions import InvalidParameterError

_SEED_MASK = (1 << 64) - 1

# first derivation key of the independent streams of a training run
STREAM_INIT = 0
STREAM_TRAIN = 1
STREAM_VAL = 2


class SeededRng:
    """
    A reproducible random stream backed by numpy's PCG64 generator.

    Identical seeds give identical sample sequences across runs and machines.
    Independent sub-streams are derived with `derive`, keyed by integers such
    as a step index or image index, so parallel workers never share state.
    """

    def __init__(self, seed: int, _keys: Tuple[int, ...] = ()):
        """
        Args:
            seed: 64-bit non-negative integer
        """
        if not isinstance(seed, (int, np.integer)) or seed < 0 or seed > _SEED_MASK:
            raise InvalidParameterError(
                f"Seed must be a 64-bit non-negative integer, got {seed!r}",
                context={'seed': seed}
            )
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in _keys)
        sequence = np.random.SeedSequence([self.seed, *self.keys]) if self.keys \
            else np.random.SeedSequence(self.seed)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    @classmethod
    def derive(cls, seed: int, *keys: int) -> "SeededRng":
        """Create the stream identified by (seed, keys...)."""
        return cls(seed, keys)

    def child(self, *keys: int) -> "SeededRng":
        """Create a sub-stream of this stream; does not consume samples."""
        return SeededRng(self.seed, self.keys + tuple(keys))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low: int, high: Optional[int] = None, size=None):
        """Integers in [low, high)."""
        return self.generator.integers(low, high, size)

    def random(self, size=None):
        return self.generator.random(size)

    def spawn_seed(self) -> int:
        """Draw a fresh 64-bit seed for a nested stream."""
        return int(self.generator.integers(0, _SEED_MASK, dtype=np.uint64, endpoint=True))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, keys={self.keys})"
