"""Counter-based random streams keyed by (seed, replicate).

Every replicate gets its own Philox stream: the seed is the key and the
replicate index occupies the top word of the 256-bit counter.  Replicate sets
are therefore reproducible independently of order, chunking or worker count.
"""
from __future__ import annotations

import os

import numpy as np

SEED_ENV = "VMC_SEED"


def replicate_stream(seed: int, replicate: int) -> np.random.Generator:
    if seed < 0 or replicate < 0:
        raise ValueError("seed and replicate must be nonnegative")
    return np.random.Generator(np.random.Philox(key=seed, counter=replicate << 192))


def uniform_block(seed: int, replicates: range, n: int) -> np.ndarray:
    """``len(replicates) x n`` array; row ``i`` is the first ``n`` draws of replicate ``replicates[i]``."""
    out = np.empty((len(replicates), n))
    for i, r in enumerate(replicates):
        out[i] = replicate_stream(seed, r).random(n)
    return out


def resolve_seed(flag: int | None) -> int:
    """Seed precedence: explicit flag, then ``$VMC_SEED``, then 0."""
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{SEED_ENV}={env!r} is not an integer") from None
    return 0
