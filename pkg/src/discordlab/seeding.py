"""Counter-based random substreams.

Every random draw in the package comes from a generator keyed by
``(seed, *indices)``, so a result never depends on how work is split
across workers or on how many items were requested in total.
"""

import numpy as np


def seed_sequence(seed, *keys):
    """Return the ``SeedSequence`` for ``seed`` extended by ``keys``.

    ``seed`` is either an integer or an existing ``SeedSequence``; in the
    latter case the keys are appended to its spawn key.
    """
    keys = tuple(int(k) for k in keys)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + keys)
    return np.random.SeedSequence(int(seed), spawn_key=keys)


def substream(seed, *keys):
    """Independent ``numpy.random.Generator`` for the given key path."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))
