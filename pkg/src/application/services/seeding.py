from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Philox-backed generator; a Generator passes through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def derive_seed(seed: int, *keys: int) -> int:
    """Stable child seed for a (seed, keys...) path, e.g. (run seed, epoch, batch)."""
    sequence = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


__all__ = ["SeedLike", "make_rng", "derive_seed"]
