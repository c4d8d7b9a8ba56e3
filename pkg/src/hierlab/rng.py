"""Splittable seeding: every random battery is drawn from (seed, stream id).

The contract is numpy's SeedSequence with ``spawn_key=(stream,)`` feeding a
PCG64 generator, so a battery depends only on the pair and not on call order.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 0xA11CE

# stream ids
STREAM_ATOMS = 1
STREAM_TEST_VECTORS = 2
STREAM_CYLINDRICAL = 3
STREAM_COMPACTS = 4
STREAM_KERNEL = 5
STREAM_CORRUPTION = 6
STREAM_BBGKY = 7


def make_rng(seed: int = DEFAULT_SEED, stream: int = 0) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(int(stream),))))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
