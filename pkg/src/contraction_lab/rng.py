"""Counter-based random streams keyed by ``(seed, stream, chunk, step)``.

Each draw position is addressed directly through the Philox counter, so a
trajectory block produces the same numbers regardless of which thread runs
it or in which order the blocks are processed. Normals are drawn mode-major,
``(d, n)``, so truncations of different dimension driven by the same key
share the increments of their leading modes.
"""
from __future__ import annotations

import numpy as np

__all__ = ["StreamFactory"]

# stream identifiers used by the simulators
NOISE_PRIMARY = 1
NOISE_SECONDARY = 2
INITIAL = 3


class StreamFactory:
    """Factory of Philox generators for a fixed 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._keys: dict[int, np.ndarray] = {}

    def _key(self, stream: int) -> np.ndarray:
        key = self._keys.get(stream)
        if key is None:
            key = np.random.SeedSequence([self.seed, int(stream)]).generate_state(2, np.uint64)
            self._keys[stream] = key
        return key

    def generator(self, stream: int, chunk: int = 0, step: int = 0) -> np.random.Generator:
        counter = np.array([0, 0, int(step), int(chunk)], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self._key(stream), counter=counter))

    def normals(self, stream: int, chunk: int, step: int, d: int, n: int) -> np.ndarray:
        """Standard normals of shape ``(n, d)``; mode ``k`` of every row is fixed by ``k`` alone."""
        return self.generator(stream, chunk, step).standard_normal((d, n)).T
