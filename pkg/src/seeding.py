"""Named random substreams derived from one master seed."""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MAX = 2**64 - 1


def derive_seed(master: int, *labels: object) -> int:
    """Stable 64-bit seed for ``(master, *labels)``; independent of call order."""
    key = ":".join([str(int(master))] + [str(label) for label in labels])
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")


def substream(master: int, *labels: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))


__all__ = ["SEED_MAX", "derive_seed", "substream"]
