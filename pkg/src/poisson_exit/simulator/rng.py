"""Philox4x32-10 counter-based generator.

Path ``i`` of a run with seed ``s`` draws block ``j`` as
Philox(key=(s_lo, s_hi), counter=(j_lo, j_hi, i_lo, i_hi)), so every
(path, draw) pair maps to its own counter and a path's stream does not
depend on which worker simulates it or in what order.
"""

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_INV53 = 1.0 / 9007199254740992.0

# state layout (uint64): key0, key1, ctr0..ctr3, buffer position, buffer0..buffer3
STATE_SIZE = 11


@njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on a 4x32-bit counter with a 2x32-bit key (values held in uint64)."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK
        c0 = (hi1 ^ c1 ^ k0) & _MASK
        c1 = lo1
        c2 = (hi0 ^ c3 ^ k1) & _MASK
        c3 = lo0
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@njit(cache=True, nogil=True)
def stream_init(st, seed, path):
    """Reset ``st`` to the start of the substream for ``path``."""
    seed = np.uint64(seed)
    path = np.uint64(path)
    st[0] = seed & _MASK
    st[1] = seed >> _S32
    st[2] = np.uint64(0)  # block counter lo
    st[3] = np.uint64(0)  # block counter hi
    st[4] = path & _MASK
    st[5] = path >> _S32
    st[6] = np.uint64(4)  # buffer position; 4 = empty
    st[7] = np.uint64(0)
    st[8] = np.uint64(0)
    st[9] = np.uint64(0)
    st[10] = np.uint64(0)


@njit(cache=True, nogil=True)
def next_u32(st):
    pos = st[6]
    if pos >= 4:
        r0, r1, r2, r3 = philox4x32(st[2], st[3], st[4], st[5], st[0], st[1])
        st[7] = r0
        st[8] = r1
        st[9] = r2
        st[10] = r3
        lo = (st[2] + np.uint64(1)) & _MASK
        st[2] = lo
        if lo == 0:
            st[3] = (st[3] + np.uint64(1)) & _MASK
        pos = np.uint64(0)
    out = st[7 + pos]
    st[6] = pos + np.uint64(1)
    return out


@njit(cache=True, nogil=True)
def next_uniform(st):
    """Uniform on the open interval (0, 1) with 53 random bits."""
    hi = next_u32(st) >> np.uint64(5)
    lo = next_u32(st) >> np.uint64(6)
    return ((hi * np.uint64(67108864) + lo) + 0.5) * _INV53


@njit(cache=True, nogil=True)
def next_exponential(st, rate):
    if rate <= 0.0:
        return np.inf
    return -np.log(next_uniform(st)) / rate


@njit(cache=True, nogil=True)
def next_normal(st):
    # Box-Muller, one variate per call so the stream stays a pure function of the draw index
    u1 = next_uniform(st)
    u2 = next_uniform(st)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@njit(cache=True, nogil=True)
def _uniforms(seed, path, n):
    st = np.zeros(STATE_SIZE, dtype=np.uint64)
    stream_init(st, seed, path)
    out = np.empty(n)
    for i in range(n):
        out[i] = next_uniform(st)
    return out


def path_uniforms(seed: int, path: int, n: int) -> np.ndarray:
    """First ``n`` uniforms of the substream for ``path``; for tests and diagnostics."""
    return _uniforms(np.uint64(seed), np.uint64(path), n)
