"""Philox4x32-10 counter-based generator, vectorised over counters.

Every draw is a pure function of ``(seed, path, step, block)`` so results do
not depend on how paths are split across workers.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def philox4x32(counter, key, rounds: int = 10):
    """Apply Philox4x32 to ``counter`` (shape ``(4, n)``) under ``key`` (2 words).

    Words are carried in uint64 arrays holding 32-bit values.
    """
    c0, c1, c2, c3 = (np.asarray(w, dtype=np.uint64) & _MASK for w in counter)
    k0 = np.uint64(key[0]) & _MASK
    k1 = np.uint64(key[1]) & _MASK
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _S32, p0 & _MASK
        hi1, lo1 = p1 >> _S32, p1 & _MASK
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3])


def uniforms(seed: int, path, step, block: int = 0):
    """Two doubles in (0, 1) per path from counter ``(step, path_lo, path_hi, block)``.

    Returns shape ``(2, n)``.
    """
    path = np.asarray(path, dtype=np.uint64)
    step = np.broadcast_to(np.asarray(step, dtype=np.uint64), path.shape)
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    key = (seed & 0xFFFFFFFF, seed >> 32)
    ctr = (step, path & _MASK, path >> _S32, np.full(path.shape, block, dtype=np.uint64))
    w = philox4x32(ctr, key)
    # 53-bit mantissa from two words, offset by half an ulp to stay off 0
    a = ((w[0] >> np.uint64(5)) << np.uint64(26)) | (w[1] >> np.uint64(6))
    b = ((w[2] >> np.uint64(5)) << np.uint64(26)) | (w[3] >> np.uint64(6))
    scale = 1.0 / 9007199254740992.0
    return np.stack([(a.astype(np.float64) + 0.5) * scale, (b.astype(np.float64) + 0.5) * scale])
