"""Named, independently-seeded random streams.

Each stream is a counter-based Philox generator keyed by (seed, stream name),
so the same seed always replays the same draw sequence per stream and streams
never interfere with each other. The training code keeps separate streams for
data order, augmentation, translation decisions and weight init.
"""

import zlib

import numpy as np

STREAM_NAMES = ("data", "augment", "translate", "init")


class RngStream:
    """One named draw sequence; identical (seed, name) means identical draws."""

    def __init__(self, name, seed, extra=()):
        self.name = name
        self.seed = seed
        key = (int(seed), zlib.crc32(name.encode("utf-8"))) + tuple(int(e) for e in extra)
        self._gen = np.random.Generator(np.random.Philox(key=np.random.SeedSequence(key).generate_state(2, np.uint64)))

    def spawn(self, index):
        """Derived stream for a sub-task (for example one scene of a dataset)."""
        return RngStream(self.name, self.seed, extra=(index,))

    def uniform(self, lo=0.0, hi=1.0, size=None):
        return self._gen.uniform(lo, hi, size=size)

    def normal(self, scale=1.0, size=None):
        return self._gen.normal(0.0, scale, size=size)

    def integers(self, lo, hi, size=None):
        """Uniform integers in [lo, hi)."""
        return self._gen.integers(lo, hi, size=size)

    def bernoulli(self, p):
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return bool(self._gen.uniform() < p)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, n, k, replace=False):
        return self._gen.choice(n, size=k, replace=replace)


def make_streams(seed, names=STREAM_NAMES):
    """The standard bundle of independent streams used by training runs."""
    return {name: RngStream(name, seed) for name in names}
