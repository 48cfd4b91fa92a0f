"""Per-replica random streams usable from numba kernels.

Every Monte Carlo replica owns one xoshiro256** state (four ``uint64``
words) derived from its integer seed through :class:`numpy.random.SeedSequence`.
Kernels advance the state in place, so a chain is reproducible from its seed
alone and independent of whatever else runs in the process.
"""

import numpy as np
from numba import njit

_U1 = np.uint64(1)
_M5 = np.uint64(5)
_M9 = np.uint64(9)
_S7 = np.uint64(7)
_S11 = np.uint64(11)
_S17 = np.uint64(17)
_S45 = np.uint64(45)
_S57 = np.uint64(57)
_S19 = np.uint64(19)
_INV53 = 1.0 / 9007199254740992.0


def make_state(seed):
    """Return a fresh xoshiro256** state for ``seed``."""
    state = np.random.SeedSequence(int(seed)).generate_state(4, dtype=np.uint64)
    if not state.any():
        state[0] = 1
    return state


@njit(cache=True, inline="always")
def next_u64(s):
    s1 = s[1]
    x = s1 * _M5
    result = ((x << _S7) | (x >> _S57)) * _M9
    t = s1 << _S17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s3 = s[3]
    s[3] = (s3 << _S45) | (s3 >> _S19)
    return result


@njit(cache=True, inline="always")
def uniform(s):
    return float(next_u64(s) >> _S11) * _INV53


@njit(cache=True, inline="always")
def below(s, n):
    # n is small compared to 2**53, the bias is negligible
    return int(uniform(s) * n)


@njit(cache=True)
def fill_uniform(s, out):
    for i in range(out.shape[0]):
        out[i] = uniform(s)
