"""Seeded randomness.

Every stochastic run derives its generator from ``substream(seed, index)``:
a Philox counter-based bit generator keyed by the pair (seed, index). Equal
pairs give bit-identical streams on any platform, distinct trial indices give
statistically independent streams, and no global state is involved.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for trial `index` of a run seeded with `seed`."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
