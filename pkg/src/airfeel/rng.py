"""Named, splittable random streams.

Every source of randomness in a run is a separate stream addressed by
(seed, domain, *indices).  Streams derived this way are independent of
each other and of the order in which they are created, so device- or
grid-level parallelism can never reorder draws.
"""

import numpy as np

# Fixed domain codes; never renumber, stream identities depend on them.
_DOMAINS = {
    "init": 0,
    "shard": 1,
    "train": 2,
    "noise": 3,
    "trial": 4,
    "papr": 5,
}


def substream(seed: int, domain: str, *key: int) -> np.random.Generator:
    """Return the generator for the (seed, domain, *key) stream."""
    seq = np.random.SeedSequence(
        entropy=int(seed), spawn_key=(_DOMAINS[domain], *(int(k) for k in key))
    )
    return np.random.default_rng(seq)
