"""Deterministic 64-bit pseudo-random stream (splitmix64).

State advances by the golden-gamma increment 0x9E3779B97F4A7C15 and each
output is finalized with the two-round mixer (0xBF58476D1CE4E5B9,
0x94D049BB133111EB, shifts 30/27/31). The same constants in any language
reproduce the stream bit-for-bit, which is what the synthetic-data
contracts require.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()


def shuffled_indices(n: int, seed: int = 0x5EED) -> list[int]:
    """Deterministic Fisher-Yates permutation of range(n)."""
    rng = SplitMix64(seed)
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx
