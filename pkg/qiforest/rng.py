"""
Keyed deterministic random streams.

Every random draw in qiforest comes from a numpy Generator derived from the
master seed plus a tuple of integer keys (stream kind, dataset index, repeat,
learner index, ...). Two callers asking for the same keys get the same stream,
which is what lets parallel and serial training produce identical models and
lets a treatment and its baseline share bootstrap draws.
"""

import numpy as np

from qiforest.errors import InvalidInput

# stream kinds
BOOTSTRAP = 1
SUBSET = 2
SPLIT = 3
TRIAL = 4
MODEL = 5
DATA = 6

MAX_SEED = 2**64 - 1


def check_seed(seed):
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise InvalidInput(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= MAX_SEED:
        raise InvalidInput(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return int(seed)


def derive_rng(seed, *keys):
    """
    Generator for the stream identified by (seed, *keys).

    Args:
        seed: master seed, unsigned 64-bit
        *keys: non-negative integers naming the stream

    Returns:
        numpy Generator instance
    """
    entropy = [check_seed(seed), *(int(key) for key in keys)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed, *keys):
    """Child seed (unsigned 64-bit int) for handing to a component that seeds itself."""
    entropy = [check_seed(seed), *(int(key) for key in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])
