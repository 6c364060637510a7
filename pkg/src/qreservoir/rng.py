"""Counter-based random streams.

Every random draw is a pure function of ``(seed, stream_id, counter)``, so a
trajectory's outcomes do not depend on which worker simulated it or on how
shots were batched.  The mixer is the SplitMix64 finalizer applied to a
keyed combination of the three words.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM_KEY = np.uint64(0xD1B54A32D192ED03)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint64)


def random_bits(seed: int, stream_ids, counter) -> np.ndarray:
    """64-bit words for each (stream_id, counter) pair under ``seed``.

    ``stream_ids`` and ``counter`` broadcast against each other.
    """
    with np.errstate(over="ignore"):
        key = _mix(np.uint64(seed & _MASK) + _GOLDEN)
        s = _mix(key ^ (_u64(stream_ids) * _STREAM_KEY + _GOLDEN))
        return _mix(s + (_u64(counter) + np.uint64(1)) * _GOLDEN)


def uniforms(seed: int, stream_ids, counter) -> np.ndarray:
    """Doubles in [0, 1) with 53 random bits."""
    return (random_bits(seed, stream_ids, counter) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def derive_seed(seed: int, *labels: int) -> int:
    """Child seed for a labelled sub-experiment (e.g. one window circuit)."""
    out = seed & _MASK
    for label in labels:
        out = int(random_bits(out, np.uint64(label & _MASK), 0xFFFF_FFFF))
    return out


@dataclass
class RngStream:
    """One independent stream: a (seed, stream_id) key plus a draw counter.

    Draw ``k`` of a stream always equals ``uniforms(seed, stream_id, k)``, which
    is what lets the batched executor reproduce single-trajectory results.
    """

    seed: int
    stream_id: int = 0
    counter: int = field(default=0)

    def uniform(self) -> float:
        value = float(uniforms(self.seed, self.stream_id, self.counter))
        self.counter += 1
        return value

    def uniforms(self, n: int) -> np.ndarray:
        counters = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return uniforms(self.seed, self.stream_id, counters)

    def normals(self, n: int) -> np.ndarray:
        """Standard normals via Box-Muller (two uniforms per pair)."""
        m = (n + 1) // 2
        u = self.uniforms(2 * m)
        u1, u2 = 1.0 - u[:m], u[m:]  # u1 in (0, 1]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:n]
