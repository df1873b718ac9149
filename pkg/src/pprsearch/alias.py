"""Walker/Vose alias tables for O(1) weighted discrete sampling."""
from __future__ import annotations

from typing import Sequence

import numpy as np


class AliasTable:
    """Samples index ``i`` with probability ``weights[i] / sum(weights)``.

    Construction is linear in the number of outcomes and each draw costs
    one uniform integer plus one uniform real.  The table is a pure
    function of the weight sequence (including its order).
    """

    __slots__ = ("prob", "alias", "total_weight")

    def __init__(self, prob: np.ndarray, alias: np.ndarray, total_weight: float):
        self.prob = prob
        self.alias = alias
        self.total_weight = total_weight

    def __len__(self) -> int:
        return len(self.prob)

    def __repr__(self) -> str:
        return f"AliasTable(size={len(self)}, total_weight={self.total_weight!r})"

    def sample(self, rng: np.random.Generator, size: int | None = None):
        k = len(self.prob)
        if size is None:
            i = int(rng.integers(k))
            return i if rng.random() < self.prob[i] else int(self.alias[i])
        slots = rng.integers(0, k, size=size)
        coins = rng.random(size)
        return np.where(coins < self.prob[slots], slots, self.alias[slots])

    def probabilities(self) -> np.ndarray:
        """Exact outcome distribution encoded by the table."""
        k = len(self.prob)
        out = self.prob.copy()
        np.add.at(out, self.alias, 1.0 - self.prob)
        return out / k


def _vose(weights: Sequence[float]) -> tuple[list[float], list[int], float]:
    k = len(weights)
    total = 0.0
    for x in weights:
        if not x >= 0.0:
            raise ValueError(f"weights must be nonnegative, got {x!r}")
        total += x
    if not total > 0.0:
        raise ValueError("at least one weight must be strictly positive")

    scaled = [x * k / total for x in weights]
    prob = [1.0] * k
    alias = list(range(k))
    small = [i for i, x in enumerate(scaled) if x < 1.0]
    large = [i for i, x in enumerate(scaled) if x >= 1.0]
    while small and large:
        lo = small.pop()
        hi = large.pop()
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        if scaled[hi] < 1.0:
            small.append(hi)
        else:
            large.append(hi)
    # leftovers are 1 up to rounding
    return prob, alias, total


def build_alias(weights: Sequence[float]) -> AliasTable:
    """Build an alias table; raises ``ValueError`` on negative or all-zero weights."""
    prob, alias, total = _vose(weights)
    return AliasTable(np.asarray(prob, dtype=np.float64), np.asarray(alias, dtype=np.int64), total)
