"""Seeded random streams.

Every random decision in cloud generation comes from one of the streams
below, each derived from ``CloudConfig.seed`` through numpy's
``SeedSequence`` with a fixed spawn key. Streams are independent of each
other, so generating node ``k``'s dataset never depends on how many draws
other nodes consumed.

    spawn key (0,)    node types, dump formats and compression
    spawn key (1,)    node graph
    spawn key (2, k)  RDF dataset of node k
"""

from __future__ import annotations

import numpy as np

# Part of the manifest: changing the generator or the stream layout changes
# every cloud, so it must be visible in the output.
GENERATOR_ID = "numpy-PCG64/SeedSequence/v1"

TYPES_STREAM = 0
GRAPH_STREAM = 1
RDF_STREAM = 2


class Draws:
    """Thin wrapper over a numpy ``Generator`` that counts draws and exposes
    only the primitives the generators use."""

    def __init__(self, seed: int, *key: int):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
        self._rng = np.random.Generator(np.random.PCG64(ss))
        self.count = 0

    def uniform(self) -> float:
        self.count += 1
        return float(self._rng.random())

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in ``[low, high]`` (both inclusive)."""
        self.count += 1
        return int(self._rng.integers(low, high + 1))

    def index(self, n: int) -> int:
        return self.integer(0, n - 1)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def categorical(self, weights) -> int:
        w = np.asarray(weights, dtype=float)
        cum = np.cumsum(w)
        u = self.uniform() * cum[-1]
        return min(int(np.searchsorted(cum, u, side="right")), len(w) - 1)

    def weighted_sample(self, weights, k: int) -> list[int]:
        """``k`` distinct indices, drawn one at a time with probability
        proportional to ``weights``; a drawn index gets weight zero.

        Returns every index with positive weight (ascending) when fewer than
        ``k`` exist.
        """
        w = np.array(weights, dtype=float)
        positive = int(np.count_nonzero(w > 0))
        if positive <= k:
            return [int(i) for i in np.flatnonzero(w > 0)]
        picked = []
        for _ in range(k):
            i = self.categorical(w)
            # zero-weight slots are never selected: searchsorted skips flat runs
            picked.append(i)
            w[i] = 0.0
        return picked

    def sample(self, n: int, k: int) -> list[int]:
        """``k`` distinct indices out of ``range(n)``, uniformly."""
        return self.weighted_sample(np.ones(n), k)
