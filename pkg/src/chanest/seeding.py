"""Counter-based random streams derived from a master seed.

Every stochastic quantity in the workbench draws from a Philox generator
keyed by (master seed, domain tag, index...).  Streams are therefore
independent of evaluation order and thread scheduling, and two runs with
the same master seed are bit-identical.
"""

import numpy as np

# Domain tags keep unrelated streams (channel taps, payload symbols,
# noise, training shuffles...) from colliding for the same index path.
DOMAIN_CHANNEL = 1
DOMAIN_FRAME = 2
DOMAIN_NOISE = 3
DOMAIN_TRAIN = 4
DOMAIN_INIT = 5
DOMAIN_SPEED = 6

__all__ = ["derived_rng", "derived_seed"] + [
    n for n in dir() if n.startswith("DOMAIN_")
]


def derived_rng(master_seed, *path):
    """Philox generator keyed by (master_seed, *path)."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))


def derived_seed(master_seed, *path):
    """A stable 64-bit sub-seed for handing to APIs that take one seed."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
