"""splitmix64, vectorised with numpy (uint64 arithmetic wraps mod 2**64)."""

from __future__ import annotations

import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_CHUNK = 1 << 22


def splitmix64(seed: int, n: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start + n - 1`` of the stream seeded with ``seed``."""
    state = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    state *= np.uint64(GOLDEN_GAMMA)
    state += np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    z = state
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def uniform_f64(seed: int, n: int, out: np.ndarray | None = None) -> np.ndarray:
    """``n`` doubles in [0, 1): the top 53 bits of each output times 2**-53."""
    if out is None:
        out = np.empty(n, dtype="<f8")
    for lo in range(0, n, _CHUNK):
        hi = min(n, lo + _CHUNK)
        z = splitmix64(seed, hi - lo, start=lo)
        np.multiply(z >> np.uint64(11), 2.0**-53, out=out[lo:hi], casting="unsafe")
    return out
