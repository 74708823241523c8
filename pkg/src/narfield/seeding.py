"""Counter-based 64-bit hashing for reproducible randomness.

Every random draw in the package is a pure function of integer keys, so results
do not depend on the order in which replications or sites are processed.

Scheme ``splitmix64-xor-v1``
----------------------------
``mix64`` is the SplitMix64 finalizer, a bijection on 64-bit words::

    z = (x + 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

Two 32-bit keys ``(a, b)`` are combined under a seed as
``mix64(mix64(seed) ^ ((a << 32) | (b mod 2**32)))``.  For a fixed seed
this is injective over ``0 <= a < 2**32`` and any ``b`` in a 32-bit window,
because both the packing and ``mix64`` are bijections.
"""

import numpy as np

SCHEME_ID = "splitmix64-xor-v1"

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
# Distinguishes replication seeds from site keys derived from the same master.
_REPLICATION_TAG = 0x5EED_0F_2E_91_1CA7E


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a Python int (taken modulo 2**64)."""
    z = (x + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def mix64_array(x):
    """Vectorized :func:`mix64` over a ``uint64`` array (wrapping arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def pack_keys(a, b):
    """Pack ``a`` (high 32 bits) and ``b`` mod 2**32 (low 32 bits)."""
    a = np.asarray(a, dtype=np.int64).astype(np.uint64)
    b = np.asarray(b, dtype=np.int64).astype(np.uint64) & np.uint64(0xFFFFFFFF)
    return (a << np.uint64(32)) | b


def derive_replication_seed(master_seed: int, size_index: int, replication_index: int) -> int:
    """Seed of one replication of one experiment size.

    Injective in ``(size_index, replication_index)`` for a fixed master seed
    while both indices are below 2**32.
    """
    if not (0 <= size_index < 2**32 and 0 <= replication_index < 2**32):
        raise ValueError("size_index and replication_index must fit in 32 bits")
    base = mix64((master_seed ^ _REPLICATION_TAG) & _MASK)
    return mix64(base ^ ((size_index << 32) | replication_index))


def site_hash(seeds, i, t):
    """Hash of ``(seed, i, t)`` for broadcastable integer arrays.

    ``seeds`` are 64-bit seeds, ``i`` node labels and ``t`` (possibly negative)
    time indices.  Returns a ``uint64`` array of the broadcast shape.
    """
    s = np.asarray(seeds, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(mix64_array(s) ^ pack_keys(i, t))


def to_unit_interval(h):
    """Map 64-bit hashes to doubles strictly inside (0, 1)."""
    top = (np.asarray(h, dtype=np.uint64) >> np.uint64(11)).astype(np.float64)
    return (top + 0.5) * 2.0**-53
