"""Seedable pseudorandom numbers for every stochastic step in the pipeline.

The generator is xoshiro256++ with splitmix64 seeding. For cheap bulk draws
the implementation advances ``LANES`` independent xoshiro256++ streams in
lockstep with numpy uint64 arithmetic; one step yields a block of ``LANES``
64-bit words, and consumers read the concatenation of those blocks as a
single stream. Lane count and seeding order are fixed constants of the
algorithm, so a seed produces the identical stream on every platform.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# One scaled 53-bit mantissa per uniform double.
_U53 = 2.0 ** -53


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of the splitmix64 stream started at ``seed``."""
    idx = np.arange(1, n + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK) + idx * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def derive_seed(seed: int, label: str) -> int:
    """Deterministic child seed for a named sub-stream of ``seed``."""
    return int(splitmix64((seed & _MASK) ^ _fnv1a64(label), 2)[1])


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Rng:
    """xoshiro256++ stream with vectorized lanes.

    Lane ``l`` is a canonical xoshiro256++ generator whose four state words
    are splitmix64 outputs ``4l+1 .. 4l+4`` of the seed. Each step emits one
    word per lane (lane-major), and draws consume that stream in order.
    """

    LANES = 1024

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        words = splitmix64(self.seed, 4 * self.LANES)
        s = words.reshape(self.LANES, 4).T.copy()
        self._s0, self._s1, self._s2, self._s3 = s[0], s[1], s[2], s[3]
        self._buf = np.empty(0, dtype=np.uint64)
        self._pos = 0

    def spawn(self, label: str) -> "Rng":
        """Independent generator for a named purpose, derived from the seed."""
        return Rng(derive_seed(self.seed, label))

    def _step(self) -> np.ndarray:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        out = _rotl(s0 + s3, 23) + s0
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, _rotl(s3, 45)
        return out

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words of the stream."""
        if n < 0:
            raise ValueError("draw count must be non-negative")
        parts = []
        avail = self._buf[self._pos:]
        if avail.size:
            take = avail[:n]
            parts.append(take)
            self._pos += take.size
            n -= take.size
        while n > 0:
            block = self._step()
            if n >= block.size:
                parts.append(block)
                n -= block.size
            else:
                self._buf = block
                self._pos = n
                parts.append(block[:n])
                n = 0
        if len(parts) == 1:
            return parts[0].copy()
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.uint64)

    def uniform(self, shape=()) -> np.ndarray:
        """Doubles in [0, 1), one 53-bit mantissa per value."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        out = (self.u64(n) >> np.uint64(11)).astype(np.float64) * _U53
        return out.reshape(shape) if shape else float(out[0])

    def normal(self, shape=()) -> np.ndarray:
        """Standard Gaussian via Box-Muller on consecutive uniform pairs."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        m = (n + 1) // 2
        w = self.u64(2 * m)
        # u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        u1 = ((w[:m] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
        u2 = (w[m:] >> np.uint64(11)).astype(np.float64) * _U53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return z.reshape(shape) if shape else float(z[0])

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n), one uniform per position."""
        perm = np.arange(n)
        if n < 2:
            return perm
        u = self.uniform(n - 1)
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm
