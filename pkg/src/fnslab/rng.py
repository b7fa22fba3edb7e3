"""Seeded xorshift-class generator for reproducible random fields.

The generator is pinned down by its recurrence so that any
reimplementation produces bit-identical streams.  State is a single
64-bit word s (nonzero).  One step:

    s ^= s >> 12
    s ^= (s << 25) & 0xffffffffffffffff
    s ^= s >> 27
    output = (s * 2685821657736338717) & 0xffffffffffffffff

Uniform doubles take the top 53 bits of the output divided by 2^53.
Gaussian pairs come from the Box-Muller transform applied to
consecutive uniforms.  A zero seed is remapped to a fixed nonzero
constant so every seed is usable.
"""

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_MULT = 2685821657736338717
_ZERO_SEED_SUB = 0x9E3779B97F4A7C15


class Xorshift64Star:
    def __init__(self, seed: int):
        s = int(seed) & _MASK
        self._s = s if s != 0 else _ZERO_SEED_SUB

    def next_u64(self) -> int:
        s = self._s
        s ^= s >> 12
        s ^= (s << 25) & _MASK
        s ^= s >> 27
        self._s = s
        return (s * _MULT) & _MASK

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal_pair(self) -> tuple[float, float]:
        """One Box-Muller pair of independent standard normals."""
        u1 = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        th = 2.0 * math.pi * u2
        return r * math.cos(th), r * math.sin(th)

    def normals(self, count: int) -> list[float]:
        out = []
        while len(out) < count:
            a, b = self.normal_pair()
            out.append(a)
            if len(out) < count:
                out.append(b)
        return out

    def complex_normals(self, count: int) -> list[complex]:
        """count independent standard complex Gaussians (variance 1 total)."""
        out = []
        for _ in range(count):
            a, b = self.normal_pair()
            out.append(complex(a, b) / math.sqrt(2.0))
        return out
