"""Counter-based random streams.

Every draw is a pure function of ``(master_seed, path_index, substream,
draw_index)``: the Philox4x32-10 block cipher is keyed by the master seed and
fed a counter built from the remaining three.  Paths can therefore be
generated in any order and on any number of threads with bit-identical
results.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_SHIFT32 = np.uint64(32)
_SHIFT11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0

# draws held per refill of a path-local buffer; two doubles per Philox block
BUFFER_DRAWS = 64


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32 with 10 rounds on uint64 carriers of 32-bit words."""
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        n0 = (p1 >> _SHIFT32) ^ c1 ^ k0
        n2 = (p0 >> _SHIFT32) ^ c3 ^ k1
        c1 = p1 & _MASK32
        c3 = p0 & _MASK32
        c0 = n0
        c2 = n2
    return c0, c1, c2, c3


@njit(cache=True)
def fill_uniforms(out, key0, key1, path, substream, first_block):
    """Write ``len(out)`` uniforms, two per block, starting at ``first_block``.

    Values are ``k * 2**-53`` with ``k`` the top 53 bits of a 64-bit word, so
    they lie in ``[0, 1)``; callers map 0 away (see ``next_uniform``).
    """
    path = np.uint64(path)
    c2 = path & _MASK32
    c3 = path >> _SHIFT32
    sub = np.uint64(substream) << np.uint64(24)
    nblocks = (out.shape[0] + 1) // 2
    for b in range(nblocks):
        blk = np.uint64(first_block + b)
        c0 = blk & _MASK32
        c1 = ((blk >> _SHIFT32) & np.uint64(0xFFFFFF)) | sub
        x0, x1, x2, x3 = philox4x32(c0, c1, c2, c3, key0, key1)
        a = ((x0 << _SHIFT32) | x1) >> _SHIFT11
        out[2 * b] = np.float64(a) * _TWO_M53
        if 2 * b + 1 < out.shape[0]:
            a = ((x2 << _SHIFT32) | x3) >> _SHIFT11
            out[2 * b + 1] = np.float64(a) * _TWO_M53


@njit(cache=True)
def new_cursor(start):
    """Cursor ``[next block, position in buffer, draws consumed]``."""
    cur = np.empty(3, dtype=np.int64)
    cur[0] = start // 2
    cur[1] = BUFFER_DRAWS  # forces a refill on first use
    cur[2] = start
    return cur


@njit(cache=True)
def next_uniform(buf, cur, key0, key1, path, substream):
    """Next draw of a stream, in the open interval (0, 1).

    A raw value of exactly 0 is discarded and the following draw used.
    """
    while True:
        if cur[1] >= BUFFER_DRAWS:
            skip = cur[2] - 2 * cur[0]
            fill_uniforms(buf, key0, key1, path, substream, cur[0])
            cur[0] += BUFFER_DRAWS // 2
            cur[1] = skip
        u = buf[cur[1]]
        cur[1] += 1
        cur[2] += 1
        if u > 0.0:
            return u


def split_seed(master_seed: int) -> tuple[np.uint64, np.uint64]:
    """Split a 64-bit seed into the two 32-bit Philox key words."""
    seed = int(master_seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"master_seed must fit in 64 unsigned bits, got {master_seed}")
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


class RngStream:
    """A reproducible uniform stream for one path.

    The values depend only on ``(master_seed, path_index, substream)``.
    Substream 0 drives the process values and substream 1 the inter-arrival
    times, so the two sequences are independent.  The object keeps a read
    position; ``fresh()`` returns a copy rewound to the start.
    """

    def __init__(self, master_seed: int, path_index: int = 0, substream: int = 0):
        if path_index < 0:
            raise ValueError("path_index must be nonnegative")
        if not 0 <= substream < 256:
            raise ValueError("substream must be in [0, 256)")
        self.master_seed = int(master_seed)
        self.path_index = int(path_index)
        self.substream = int(substream)
        self.key = split_seed(master_seed)
        self.position = 0
        self._buf = np.empty(BUFFER_DRAWS, dtype=np.float64)
        self._cur = new_cursor(0)

    def __repr__(self) -> str:
        return (
            f"RngStream(master_seed={self.master_seed}, path_index={self.path_index}, "
            f"substream={self.substream}, position={self.position})"
        )

    def fresh(self) -> "RngStream":
        return RngStream(self.master_seed, self.path_index, self.substream)

    def sibling(self, substream: int) -> "RngStream":
        """Stream for the same path on another substream, at position 0."""
        return RngStream(self.master_seed, self.path_index, substream)

    def uniform(self) -> float:
        u = next_uniform(self._buf, self._cur, self.key[0], self.key[1], self.path_index, self.substream)
        self.position = int(self._cur[2])
        return float(u)

    def uniforms(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.float64)
        _draw_many(out, self._buf, self._cur, self.key[0], self.key[1], self.path_index, self.substream)
        self.position = int(self._cur[2])
        return out

    def cursor(self):
        """Internal state handed to compiled kernels (shared, not copied)."""
        return self._buf, self._cur


@njit(cache=True)
def _draw_many(out, buf, cur, key0, key1, path, substream):
    for i in range(out.shape[0]):
        out[i] = next_uniform(buf, cur, key0, key1, path, substream)
