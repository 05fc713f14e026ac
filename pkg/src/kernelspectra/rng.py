"""Deterministic RNG stream derivation.

A single 64-bit master seed plus a path of small integers (trial index,
tau index, ...) identifies every random stream in the package, so whole
experiments are reproducible from one number and independent trials can
be generated in any order.
"""

from __future__ import annotations

import numpy as np

# Fixed tags so different kinds of streams derived from the same master
# seed never collide.  Values are arbitrary but frozen.
STREAM_DATA = 0x11
STREAM_SPIKE_SUPPORT = 0x22
STREAM_SPIKE_COEF = 0x23
STREAM_GUE = 0x31
STREAM_WISHART = 0x32
STREAM_TRIAL = 0x41


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Return a Generator for the stream identified by (master_seed, *path)."""
    if not (0 <= master_seed < 2**64):
        raise ValueError(f"master seed must fit in 64 bits, got {master_seed}")
    ss = np.random.SeedSequence([int(master_seed), *[int(x) for x in path]])
    return np.random.default_rng(ss)
