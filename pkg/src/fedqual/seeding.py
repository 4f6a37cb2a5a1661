"""Derivation of independent random streams from a master seed.

Every stochastic stage of a run draws from its own generator, keyed by a
stage tag plus whatever indices identify the consumer (round, client id).
This keeps results independent of scheduling and bitwise reproducible.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 63) - 1

TAG_DATA = 1
TAG_SPLIT = 2
TAG_PARTITION = 3
TAG_QUALITY = 4
TAG_ANNOTATE = 5
TAG_SELECT = 6
TAG_TRAIN = 7
TAG_THEORY = 8


def stream(*parts: int) -> np.random.Generator:
    """Return a generator seeded by the given tag/index tuple."""
    entropy = [int(p) & _MASK for p in parts]
    return np.random.default_rng(np.random.SeedSequence(entropy))
