"""Portable deterministic PRNG.

A splitmix-style 64-bit generator: cheap, seedable, and simple enough to
re-implement bit-exactly in any language.  All randomized operations in this
package (sampling, counterexample search) draw from this generator so that
results are reproducible across runs, platforms, and ports.  The frozen test
vectors live in tests/test_rng.py.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """Finalizing mixer of splitmix64 (Stafford variant 13)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential splitmix64 stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return mix64(self.state)

    def next_double(self) -> float:
        # 53 mantissa bits, uniform on [0, 1)
        return (self.next_u64() >> 11) * 2.0**-53

    def next_normal(self) -> float:
        # Box-Muller, cosine branch only: two uniforms per normal keeps the
        # stream consumption independent of call parity.
        u1 = self.next_double()
        u2 = self.next_double()
        # avoid log(0)
        u1 = max(u1, 2.0**-53)
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def next_gamma(self, alpha: float) -> float:
        """Gamma(alpha, 1) draw.

        alpha == 1 uses the exponential shortcut; alpha > 1 uses
        Marsaglia-Tsang squeeze rejection; alpha < 1 uses the boost
        gamma(a) = gamma(a+1) * u^(1/a).
        """
        if alpha <= 0.0:
            raise ValueError(f"gamma shape must be positive, got {alpha}")
        if alpha == 1.0:
            # -log(1 - u), u in [0, 1) so the argument stays in (0, 1]
            return -math.log1p(-self.next_double())
        if alpha < 1.0:
            boost = self.next_gamma(alpha + 1.0)
            u = max(self.next_double(), 2.0**-53)
            return boost * u ** (1.0 / alpha)
        d = alpha - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.next_normal()
            v = (1.0 + c * x) ** 3
            if v <= 0.0:
                continue
            u = max(self.next_double(), 2.0**-53)
            if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
                return d * v

    def dirichlet(self, alpha: float, k: int) -> list[float]:
        """Symmetric Dirichlet(alpha) draw over k outcomes."""
        draws = [self.next_gamma(alpha) for _ in range(k)]
        total = sum(draws)
        return [g / total for g in draws]


def substream(seed: int, index: int) -> SplitMix64:
    """Independent child stream for (seed, index).

    The derivation is order-free: trial i's stream depends only on (seed, i),
    so concurrent evaluation of trials cannot change any draw.
    """
    if index < 0:
        raise ValueError(f"substream index must be >= 0, got {index}")
    child = mix64((seed + _GOLDEN * (index + 1)) & _MASK)
    return SplitMix64(child)
