"""Counter-based deterministic random streams.

All randomness in this package derives from a 64-bit master seed through
the SplitMix64 finalizer.  A draw is addressed by (seed, channel, index),
so results do not depend on evaluation order or on how work is partitioned
across workers, and identical seeds reproduce identical output on any
platform.  Replication r of an experiment uses ``seed ^ mix(r)``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["mix", "mix_string", "permutation", "uniforms"]

_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def _splitmix_scalar(x: int) -> int:
    x = (x + _GAMMA) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def _splitmix_array(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def mix(index: int) -> int:
    """Stream-splitting hash; combine with a seed as ``seed ^ mix(index)``."""
    return _splitmix_scalar((index & _MASK) * 0x632BE59BD9B4E019 & _MASK)


def mix_string(text: str) -> int:
    """Stable 64-bit hash of a label, for deriving per-design seeds."""
    state = len(text) & _MASK
    for byte in text.encode("utf-8"):
        state = _splitmix_scalar(state ^ byte)
    return state


def uniforms(seed: int, channel: int, n: int) -> np.ndarray:
    """``n`` uniforms in [0, 1) addressed by (seed, channel, unit index)."""
    base = _splitmix_scalar((seed & _MASK) ^ mix(channel))
    idx = np.arange(n, dtype=np.uint64) * np.uint64(_GAMMA) + np.uint64(base)
    bits = _splitmix_array(idx)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def permutation(seed: int, channel: int, n: int) -> np.ndarray:
    """Deterministic permutation of range(n): argsort of hashed keys."""
    return np.argsort(uniforms(seed, channel, n), kind="stable")
