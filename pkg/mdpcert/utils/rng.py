"""
Seeded random streams.

Every stochastic operation takes a numpy Generator; independent streams are
derived from a master seed and integer keys so results do not depend on
scheduling or worker count.
"""
import hashlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"stream keys must be non-negative, got {key}")
        return int(key)
    digest = hashlib.sha256(str(key).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed_sequence(seed: int, *keys: Key) -> np.random.SeedSequence:
    """SeedSequence keyed by (seed, *keys)."""
    return np.random.SeedSequence([int(seed), *(_key_to_int(k) for k in keys)])


def derive_rng(seed: int, *keys: Key) -> np.random.Generator:
    """
    Independent generator for (seed, *keys).

    Args:
        seed: Master seed
        *keys: Stream labels (indices or strings such as fingerprints)

    Returns:
        numpy Generator backed by PCG64
    """
    return np.random.default_rng(derive_seed_sequence(seed, *keys))


def derive_int_seed(seed: int, *keys: Key) -> int:
    """Derived 63-bit integer seed, for handing to nested stages."""
    state = derive_seed_sequence(seed, *keys).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))
