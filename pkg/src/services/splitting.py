"""Random three-way split into equally sized sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset
from ..errors import SizeError
from ..seeding import substream


@dataclass(frozen=True)
class ThreeWaySplit:
    set1: Dataset
    set2: Dataset
    set3: Dataset
    seed: int

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.set1), len(self.set2), len(self.set3)

    def training(self) -> Dataset:
        """Union of sets 1 and 2, the data available before test time."""
        return self.set1.union(self.set2)


def split_three_way(d: Dataset, seed: int) -> ThreeWaySplit:
    n = len(d)
    if n < 3:
        raise SizeError(f"A three-way split needs at least 3 samples, got {n}.")
    perm = substream(seed, "split").permutation(n)
    parts = [np.sort(part) for part in np.array_split(perm, 3)]
    return ThreeWaySplit(d.take(parts[0]), d.take(parts[1]), d.take(parts[2]), seed=int(seed))


__all__ = ["ThreeWaySplit", "split_three_way"]
