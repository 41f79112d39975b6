"""Reproducible random substreams.

A stream is identified by a master seed and an integer path such as
``(tag, n, block)``. The path is hashed together with the seed by numpy's
``SeedSequence`` and drives a counter-based Philox generator, so the draws
for a path never depend on which other paths were used, in what order, or
by how many workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RandomStream:
    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & 0xFFFFFFFFFFFFFFFF)
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))
        if any(p < 0 for p in self.path):
            raise ValueError("stream path entries must be non-negative")

    def child(self, *keys: int) -> "RandomStream":
        return RandomStream(self.master_seed, self.path + tuple(keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))


def as_generator(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, RandomStream):
        return stream.generator()
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(stream).__name__}")
