"""Hierarchical sampling of targets in proportion to estimated PPR.

A query first draws a coordinate ``v`` with weight ``x_s[v] * y^T[v]`` and
then a target ``t`` with weight ``y^t[v]``; the marginal of ``t`` is
``<x_s, y^t> / sum_j <x_s, y^j>``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .alias import AliasTable, build_alias
from .bidirectional import estimate_from_vectors
from .graph import Graph, as_source
from .grouped_index import StorageStats, _rows, push_targets, regroup
from .reverse_push import DEFAULT_MAX_PUSHES, ReverseVector
from .walks import ForwardVector, SearchResult, forward_vector, make_rng, rank_counts

__all__ = [
    "AliasTable",
    "SamplerIndex",
    "adaptive_r_max",
    "build_alias",
    "build_sampler_index",
    "first_stage",
    "power_law_delta",
    "sample_and_rank",
    "target_distribution",
    "two_stage_distribution",
]

DEFAULT_BETA = 0.77


@dataclass(frozen=True)
class SamplerIndex:
    """Aggregate ``y^T`` plus, per coordinate, the targets and weights it can emit."""

    n: int
    alpha: float
    r_max: float
    targets: tuple[int, ...]
    aggregate: dict[int, float] = field(repr=False)
    groups: dict[int, tuple[list[int], list[float]]] = field(repr=False)
    samplers: dict[int, AliasTable] = field(repr=False, compare=False)
    stats: StorageStats = field(default=StorageStats(0, 0, 0, 0), compare=False)

    @classmethod
    def from_groups(cls, n, alpha, r_max, targets, groups, stats=None) -> "SamplerIndex":
        samplers = {v: build_alias(ys) for v, (_, ys) in groups.items()}
        aggregate = {v: tab.total_weight for v, tab in samplers.items()}
        return cls(n, alpha, r_max, tuple(targets), aggregate, groups, samplers,
                   stats or StorageStats(0, 0, 0, 0))

    @classmethod
    def from_vectors(cls, n: int, alpha: float, r_max: float, vectors: list[ReverseVector]) -> "SamplerIndex":
        vectors = sorted(vectors, key=lambda y: y.target)
        return cls.from_groups(n, alpha, r_max, [y.target for y in vectors],
                               regroup(vectors, n), StorageStats.of(vectors))

    def rows(self) -> dict[int, ReverseVector]:
        return _rows(self.n, self.targets, self.groups, self.r_max)

    def stored_entries(self) -> int:
        return sum(len(ts) for ts, _ in self.groups.values())


def build_sampler_index(
    g: Graph,
    alpha: float,
    targets: Iterable[int],
    r_max: float,
    *,
    max_pushes: int = DEFAULT_MAX_PUSHES,
    workers: int = 1,
) -> SamplerIndex:
    vectors = push_targets(g, alpha, targets, r_max, max_pushes=max_pushes, workers=workers)
    return SamplerIndex.from_vectors(g.n, alpha, r_max, vectors)


def first_stage(x: ForwardVector, index: SamplerIndex) -> tuple[list[int], list[float]]:
    """Coordinates ``v`` with positive weight ``x_s[v] * y^T[v]``, ascending."""
    agg = index.aggregate
    n = index.n
    coords: list[int] = []
    weights: list[float] = []
    for v, xv in x.coordinates():
        y = agg.get(v)
        if y is not None:
            wv = xv * y
            if wv > 0:
                coords.append(v)
                weights.append(wv)
    return coords, weights


def two_stage_distribution(x: ForwardVector, index: SamplerIndex) -> dict[int, float]:
    """``sum_v p'_s[v] p''_v[t]`` read off the alias tables themselves."""
    coords, weights = first_stage(x, index)
    out = dict.fromkeys(index.targets, 0.0)
    if not coords:
        return out
    stage1 = build_alias(weights).probabilities()
    for v, pv in zip(coords, stage1):
        ts = index.groups[v][0]
        for t, q in zip(ts, index.samplers[v].probabilities()):
            out[t] += pv * q
    return out


def target_distribution(x: ForwardVector, index: SamplerIndex) -> dict[int, float]:
    """``<x_s, y^t> / sum_j <x_s, y^j>`` from exact dot products against stored rows."""
    rows = index.rows()
    scores = {t: estimate_from_vectors(x, rows[t]) for t in index.targets}
    total = sum(scores.values())
    if total == 0:
        return dict.fromkeys(index.targets, 0.0)
    return {t: s / total for t, s in scores.items()}


def sample_and_rank(
    g: Graph,
    alpha: float,
    source,
    index: SamplerIndex,
    w: int,
    n_samples: int | None,
    rng,
    *,
    forward: ForwardVector | None = None,
    rescore_top: int = 0,
) -> SearchResult:
    """Draw ``n_samples`` targets (default ``w``) and rank by how often each was drawn.

    Targets never drawn follow in ascending id order with count 0.  With
    ``rescore_top=k`` the ``k`` most-sampled targets are re-ranked by their
    exact dot-product estimate.
    """
    rng = make_rng(rng)
    if n_samples is None:
        n_samples = w
    if w < 1 or n_samples < 1:
        raise ValueError("w and n_samples must be >= 1")
    if forward is None:
        forward = forward_vector(g, alpha, as_source(source), w, rng)
    coords, weights = first_stage(forward, index)
    if not coords:
        return SearchResult([], walks=forward.w, no_signal=True, extra={"forward": forward})

    stage1 = build_alias(weights)
    picks = stage1.sample(rng, n_samples)
    slot_ids, slot_counts = np.unique(picks, return_counts=True)
    counts: Counter[int] = Counter()
    for slot, cnt in zip(slot_ids.tolist(), slot_counts.tolist()):
        v = coords[slot]
        ts = index.groups[v][0]
        drawn = index.samplers[v].sample(rng, cnt)
        for i, c in zip(*np.unique(drawn, return_counts=True)):
            counts[ts[int(i)]] += int(c)

    ranking = rank_counts(index.targets, counts)
    extra = {"forward": forward, "support": len(coords)}
    if rescore_top > 0:
        rows = index.rows()
        head = [t for t, _ in ranking[:rescore_top]]
        rescored = sorted(((t, estimate_from_vectors(forward, rows[t])) for t in head),
                          key=lambda kv: (-kv[1], kv[0]))
        extra["rescored"] = rescored
    return SearchResult(ranking, walks=forward.w, extra=extra)


def power_law_delta(T_size: int, pi_T: float, k: int, beta: float = DEFAULT_BETA) -> float:
    """PPR of the k-th best target when values in T follow a power law with exponent ``beta``."""
    if not 1 <= k <= T_size:
        raise ValueError("need 1 <= k <= |T|")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    return (1 - beta) / T_size ** (1 - beta) * k ** (-beta) * pi_T


def adaptive_constant(k: int, c: float, beta: float = DEFAULT_BETA) -> float:
    """``k^beta * c / (1 - beta)``."""
    return k**beta * c / (1 - beta)


def adaptive_r_max(T_size: int, pi_T: float, w: float, beta: float = DEFAULT_BETA, k: int = 3, c: float = 20.0) -> float:
    """Residual threshold for a target set so that ``w`` walks resolve its top-k."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if not (T_size > 0 and pi_T > 0 and w > 0 and k > 0 and c > 0):
        raise ValueError("all arguments must be positive")
    return w * pi_T / (adaptive_constant(k, c, beta) * T_size ** (1 - beta))
