"""Zipfian rank sampling by inverting the continuous approximation.

For P(r) proportional to 1/r^s over ranks 1..n, the continuous CDF
integrates to (x^(1-s) - 1) / (n^(1-s) - 1); inverting it gives a draw in
one uniform sample, no rejection loop. The approximation's bias at small n
is irrelevant here, the pools are thousands of entries.
"""

from __future__ import annotations

import math
import random


class Zipf:
    def __init__(self, n: int, s: float = 0.99):
        if n < 1:
            raise ValueError("Zipf needs at least one rank")
        if s <= 0:
            raise ValueError("Zipf exponent must be positive")
        self.n = n
        self.s = s
        self._one_minus_s = 1.0 - s
        if abs(self._one_minus_s) > 1e-9:
            self._span = n ** self._one_minus_s - 1.0
        else:
            self._span = None  # s == 1, the integral is log(n)

    def sample(self, rnd: random.Random) -> int:
        """Draw a rank in 1..n; rank 1 is the most popular."""
        u = rnd.random()
        if self._span is None:
            x = math.exp(u * math.log(self.n))
        else:
            x = (1.0 + u * self._span) ** (1.0 / self._one_minus_s)
        return min(max(int(x), 1), self.n)
