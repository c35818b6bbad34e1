"""Counter-based random streams.

Every draw is a pure function of `(seed, key...)`, so a slot's Gumbel shock or
a search's permutation is the same no matter which worker produces it or in
which order searches are processed.

Two flavours:

* `generator(seed, *keys)` returns a `numpy.random.Generator` seeded from a
  `SeedSequence` over the hashed keys; used where one entity needs many draws
  (a user's searches, a room's covariates).
* `keyed_uniform` / `keyed_gumbel` hash uint64 key arrays with a splitmix64
  finaliser; used for per-slot draws over hundreds of thousands of rows.
"""

import hashlib
from typing import Union

import numpy as np

from ..src._typing import FloatArray

Key = Union[int, str, np.ndarray]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def stream_key(key: Union[int, str]) -> int:
    """Stable 64-bit integer for an int or string key."""
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    digest = hashlib.blake2b(str(key).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def generator(seed: int, *keys: Union[int, str]) -> np.random.Generator:
    entropy = [stream_key(seed)] + [stream_key(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_key_array(key: Key) -> np.ndarray:
    if isinstance(key, np.ndarray):
        return key.astype(np.uint64, copy=False)
    return np.asarray(stream_key(key), dtype=np.uint64)


def keyed_bits(seed: int, *keys: Key) -> np.ndarray:
    with np.errstate(over="ignore"):
        state = _mix(np.asarray(stream_key(seed), dtype=np.uint64) + _GOLDEN)
        for key in keys:
            state = _mix(state ^ (_as_key_array(key) + _GOLDEN))
    return np.atleast_1d(state)


def keyed_uniform(seed: int, *keys: Key) -> FloatArray:
    """Uniform(0, 1) draws, one per broadcast key tuple; never exactly 0."""
    bits = keyed_bits(seed, *keys)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / (1 << 53))


def keyed_gumbel(seed: int, *keys: Key) -> FloatArray:
    """Standard Gumbel (extreme value type 1) draws."""
    return -np.log(-np.log(keyed_uniform(seed, *keys)))
