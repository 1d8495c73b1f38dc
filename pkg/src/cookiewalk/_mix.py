"""64-bit mixing, site hashing and counter-based uniform streams.

Everything here exists twice: a plain-int version for the reference code
and an ``@njit`` twin used by the compiled kernel. The two must agree bit
for bit; ``tests/test_mix.py`` pins both against frozen values.

Pinned algorithm (reported in run manifests as ``MIXER_ID``):

* ``mix64`` is the SplitMix64 output finalizer.
* ``derive(w0, w1, ...)``: ``h = mix64(w0 + GOLDEN)``, then for each further
  word ``h = mix64((h ^ w) + GOLDEN)``; all arithmetic mod 2**64.
* ``uniform(key, n) = (mix64(key + (n + 1) * GOLDEN) >> 11) * 2**-53``,
  i.e. the n-th output of a SplitMix64 stream started at ``key``.
"""

import numpy as np
from numba import njit

MIXER_ID = "splitmix64-chain/v1"

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)

TAG_SITE = 0x5173
TAG_ENV = 0xE417
TAG_WALK = 0x3A1C


def mix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def derive(*words):
    """Fold integer words (any sign) into one 64-bit key."""
    h = mix64((words[0] + GOLDEN) & MASK)
    for w in words[1:]:
        h = mix64(((h ^ (w & MASK)) + GOLDEN) & MASK)
    return h


def to_unit(h):
    return (h >> 11) * _INV53


def uniform(key, n):
    return to_unit(mix64((key + (n + 1) * GOLDEN) & MASK))


def site_uniform(env_seed, coords):
    return to_unit(derive(env_seed, TAG_SITE, *coords))


def stream_key(seed, replica, tag):
    return derive(seed, tag, replica)


class CounterRNG:
    """Counter-based uniform stream; ``rng.next()`` returns ``uniform(key, n)``."""

    __slots__ = ("key", "counter")

    def __init__(self, key, counter=0):
        self.key = key & MASK
        self.counter = counter

    def next(self):
        u = uniform(self.key, self.counter)
        self.counter += 1
        return u

    def __repr__(self):
        return f"CounterRNG(key={self.key:#x}, counter={self.counter})"


# ---- compiled twins -------------------------------------------------------

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)


@njit(inline="always", cache=True)
def mix64_nb(z):
    z = (z ^ (z >> np.uint64(30))) * _U_M1
    z = (z ^ (z >> np.uint64(27))) * _U_M2
    return z ^ (z >> np.uint64(31))


@njit(inline="always", cache=True)
def to_unit_nb(h):
    return np.float64(h >> np.uint64(11)) * _INV53


@njit(inline="always", cache=True)
def uniform_nb(key, n):
    return to_unit_nb(mix64_nb(key + np.uint64(n + 1) * _U_GOLDEN))


@njit(cache=True)
def site_uniform_nb(env_seed, coords):
    h = mix64_nb(env_seed + _U_GOLDEN)
    h = mix64_nb((h ^ np.uint64(TAG_SITE)) + _U_GOLDEN)
    for j in range(coords.shape[0]):
        h = mix64_nb((h ^ np.uint64(coords[j])) + _U_GOLDEN)
    return to_unit_nb(h)
