"""Deterministic derivation of independent RNG streams from one master seed.

Every random draw in a run traces back to a 64-bit master seed through
``derive_seed``, which folds integer words into a SplitMix64-style mix: each
word advances the state by a multiple of the golden-ratio increment and is
scrambled by the SplitMix64 finalizer.  Streams derived with different word
tuples are statistically independent, and results never depend on the order
in which runs execute.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream tags; part of the on-disk reproducibility contract.
TAG_PHASE = 1
TAG_NOISE = 2
TAG_PAYLOAD = 3
TAG_PILOT = 4
TAG_INIT_PHASE = 5


def _finalize(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *words: int) -> int:
    """Mix ``words`` into ``master_seed``; equal inputs give equal outputs."""
    z = master_seed & _MASK64
    for w in words:
        z = (z + _GOLDEN * ((w + 1) & _MASK64)) & _MASK64
        z = _finalize(z)
    return _finalize(z)


def rng_for(master_seed: int, *words: int) -> np.random.Generator:
    """PCG64 generator on the stream addressed by ``words``."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *words)))
