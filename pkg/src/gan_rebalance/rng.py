"""Seeded, platform-independent random numbers.

The generator is splitmix64: a 64-bit counter advanced by the golden-ratio
increment and passed through a fixed mixing function. Because output ``i``
depends only on ``(state, i)``, a block of ``n`` draws is computed with
vectorised uint64 arithmetic and is bit-identical to drawing them one by one.

Uniforms take the top 53 bits of each output, so they lie in ``[0, 1)``.
Normals use Box-Muller on consecutive uniform pairs ``(u1, u2)``:
``sqrt(-2 log(1 - u1)) * cos(2 pi u2)`` then ``... * sin(2 pi u2)``.
"""
from __future__ import annotations

import zlib

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


def mix64(value: int) -> int:
    """Apply the splitmix64 finaliser to a single integer."""
    return int(_mix(np.array([value & _MASK], dtype=np.uint64))[0])


class Rng:
    """splitmix64 stream. ``Rng(seed)`` with the same seed always replays."""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & _MASK

    def __repr__(self):
        return f"Rng(state={self.state:#018x})"

    def next_u64(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        out = _mix(np.uint64(self.state) + steps * _GAMMA)
        self.state = (self.state + n * int(_GAMMA)) & _MASK
        return out

    def uniform(self, n: int) -> np.ndarray:
        bits = self.next_u64(n) >> np.uint64(11)
        return bits.astype(np.float64) * (1.0 / 9007199254740992.0)

    def normal(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(theta)
        out[1::2] = radius * np.sin(theta)
        return out[:n]

    def integers(self, high: int, n: int) -> np.ndarray:
        """``n`` integers in ``[0, high)`` via ``floor(u * high)``."""
        if high <= 0:
            raise ValueError(f"high must be positive, got {high}")
        idx = np.floor(self.uniform(n) * high).astype(np.int64)
        return np.minimum(idx, high - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")

    def spawn(self, tag) -> "Rng":
        """Independent child stream keyed by ``tag``; does not advance ``self``."""
        return Rng(derive_seed(self.state, tag))


def derive_seed(seed: int, tag) -> int:
    """Stable 64-bit seed for a named sub-stream of ``seed``.

    String tags are hashed with CRC32 so the result does not depend on
    Python's per-process hash randomisation.
    """
    if isinstance(tag, str):
        key = zlib.crc32(tag.encode("utf-8"))
    else:
        key = int(tag) & _MASK
    return mix64((int(seed) & _MASK) ^ mix64(key ^ 0x5DEECE66D))


def rng_uniform(rng: Rng, n: int) -> np.ndarray:
    return rng.uniform(n)


def rng_normal(rng: Rng, n: int) -> np.ndarray:
    return rng.normal(n)
