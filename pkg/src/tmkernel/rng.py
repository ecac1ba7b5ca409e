"""Counter-based random streams.

Every trajectory in a burst owns an independent Philox4x64-10 stream keyed by
``(master_seed, i << 32 | l)``; the counter is the block index.  Because a
stream is a pure function of its key, results do not depend on the order in
which trajectories are executed or on the number of threads.
"""

from dataclasses import dataclass

import numba as nb
import numpy as np

_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
_PHILOX_M1 = np.uint64(0xCA5A826395121157)
_PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
_PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
_TWO_M53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * np.pi


@nb.njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _M32
    a_hi = a >> _S32
    b_lo = b & _M32
    b_hi = b >> _S32
    p0 = a_lo * b_lo
    p1 = a_lo * b_hi
    p2 = a_hi * b_lo
    p3 = a_hi * b_hi
    mid = (p0 >> _S32) + (p1 & _M32) + (p2 & _M32)
    hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
    lo = (mid << _S32) | (p0 & _M32)
    return hi, lo


@nb.njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64 with 10 rounds on a 256-bit counter and 128-bit key."""
    for r in range(10):
        if r > 0:
            k0 = k0 + _PHILOX_W0
            k1 = k1 + _PHILOX_W1
        hi0, lo0 = _mulhilo(_PHILOX_M0, c0)
        hi1, lo1 = _mulhilo(_PHILOX_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@nb.njit(cache=True, inline="always")
def _to_unit(u):
    # (0, 1) open interval, safe for log
    return (np.float64(u >> _S11) + 0.5) * _TWO_M53


@nb.njit(cache=True)
def normal_block(block, seed, stream, out):
    """Fill ``out[:4]`` with four standard normals for counter ``block``."""
    r0, r1, r2, r3 = philox4x64(np.uint64(block), np.uint64(0), np.uint64(0),
                                np.uint64(0), np.uint64(seed), np.uint64(stream))
    u0 = _to_unit(r0)
    u1 = _to_unit(r1)
    u2 = _to_unit(r2)
    u3 = _to_unit(r3)
    rad = np.sqrt(-2.0 * np.log(u0))
    out[0] = rad * np.cos(_TWO_PI * u1)
    out[1] = rad * np.sin(_TWO_PI * u1)
    rad = np.sqrt(-2.0 * np.log(u2))
    out[2] = rad * np.cos(_TWO_PI * u3)
    out[3] = rad * np.sin(_TWO_PI * u3)


@nb.njit(cache=True)
def stream_key(i, l):
    return (np.uint64(i) << _S32) | np.uint64(l)


@dataclass(frozen=True)
class Stream:
    """Identity of one counter-based normal stream."""

    seed: int
    i: int = 0
    l: int = 0

    @property
    def key(self) -> int:
        return (self.i << 32) | self.l

    def normals(self, count: int, start_block: int = 0) -> np.ndarray:
        """The first ``count`` normals of this stream (blocks of four)."""
        return _stream_normals(count, start_block, self.seed, self.key)


@nb.njit(cache=True)
def _stream_normals(count, start_block, seed, key):
    nblocks = (count + 3) // 4
    out = np.empty(nblocks * 4)
    for b in range(nblocks):
        normal_block(start_block + b, seed, key, out[4 * b:4 * b + 4])
    return out[:count]


def philox_raw(counter: tuple, key: tuple) -> tuple:
    """Pure-python entry point into the jitted block function (for checks)."""
    c = [np.uint64(v) for v in counter]
    k = [np.uint64(v) for v in key]
    return tuple(int(v) for v in philox4x64(c[0], c[1], c[2], c[3], k[0], k[1]))
