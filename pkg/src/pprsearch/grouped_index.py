"""Reverse vectors for a target set, regrouped by coordinate for fast multi-target scoring."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable

from .graph import Graph, as_source
from .reverse_push import (
    DEFAULT_MAX_PUSHES,
    PushBudgetExceeded,
    ReverseVector,
    approx_contributions,
)
from .walks import ForwardVector, SearchResult, forward_vector, make_rng


def _push_one(g, alpha, r_max, max_pushes, t):
    return approx_contributions(g, alpha, t, r_max, max_pushes=max_pushes)


def push_targets(
    g: Graph,
    alpha: float,
    targets: Iterable[int],
    r_max: float,
    *,
    max_pushes: int = DEFAULT_MAX_PUSHES,
    workers: int = 1,
) -> list[ReverseVector]:
    """One reverse push per target, in ascending target order.

    ``workers > 1`` fans out over processes; output is identical.
    """
    targets = sorted(set(int(t) for t in targets))
    if not targets:
        raise ValueError("target set is empty")
    fn = partial(_push_one, g, alpha, r_max, max_pushes)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, targets, chunksize=max(1, len(targets) // (4 * workers))))
    return [fn(t) for t in targets]


@dataclass(frozen=True)
class StorageStats:
    pushes: int
    touched_mass: int
    stored_entries: int
    residual_entries: int

    @classmethod
    def of(cls, vectors: Iterable[ReverseVector]) -> "StorageStats":
        vectors = list(vectors)
        return cls(
            sum(y.push_count for y in vectors),
            sum(y.touched_mass for y in vectors),
            sum(y.stored_entries for y in vectors),
            sum(len(y.r) for y in vectors),
        )


def storage_bound(g: Graph, alpha: float, r_max: float, gamma: int = 1) -> float:
    """``gamma * m / (alpha * r_max)``: storage bound for all keyword sets at one ``r_max``."""
    return gamma * g.m / (alpha * r_max)


def regroup(vectors: Iterable[ReverseVector], n: int) -> dict[int, tuple[list[int], list[float]]]:
    """Column view ``v -> (targets, values)``; targets ascending if ``vectors`` are."""
    groups: dict[int, tuple[list[int], list[float]]] = {}
    for y in vectors:
        t = y.target
        for v, x in y.coordinates(n):
            entry = groups.get(v)
            if entry is None:
                groups[v] = ([t], [x])
            else:
                entry[0].append(t)
                entry[1].append(x)
    return dict(sorted(groups.items()))


@dataclass(frozen=True)
class GroupedIndex:
    """``groups[v] = (targets, values)`` with ``values[i] = y^{targets[i]}[v] > 0``.

    Coordinates ``0..n-1`` address the estimate block, ``n..2n-1`` the
    residual block.
    """

    n: int
    alpha: float
    r_max: float
    targets: tuple[int, ...]
    groups: dict[int, tuple[list[int], list[float]]] = field(repr=False)
    stats: StorageStats = field(default=StorageStats(0, 0, 0, 0), compare=False)

    @classmethod
    def from_vectors(cls, n: int, alpha: float, r_max: float, vectors: list[ReverseVector]) -> "GroupedIndex":
        vectors = sorted(vectors, key=lambda y: y.target)
        return cls(n, alpha, r_max, tuple(y.target for y in vectors), regroup(vectors, n), StorageStats.of(vectors))

    def rows(self) -> dict[int, ReverseVector]:
        """Flatten back to per-target vectors (push statistics are not kept)."""
        return _rows(self.n, self.targets, self.groups, self.r_max)

    def stored_entries(self) -> int:
        return sum(len(ts) for ts, _ in self.groups.values())


def _rows(n, targets, groups, r_max) -> dict[int, ReverseVector]:
    p: dict[int, dict[int, float]] = {t: {} for t in targets}
    r: dict[int, dict[int, float]] = {t: {} for t in targets}
    for v, (ts, xs) in groups.items():
        block, key = (p, v) if v < n else (r, v - n)
        for t, x in zip(ts, xs):
            block[t][key] = x
    return {
        t: ReverseVector(t, p[t], r[t], max(r[t].values(), default=0.0), 0, 0, r_max)
        for t in targets
    }


def build_grouped(
    g: Graph,
    alpha: float,
    targets: Iterable[int],
    r_max: float,
    *,
    max_pushes: int = DEFAULT_MAX_PUSHES,
    workers: int = 1,
) -> GroupedIndex:
    vectors = push_targets(g, alpha, targets, r_max, max_pushes=max_pushes, workers=workers)
    return GroupedIndex.from_vectors(g.n, alpha, r_max, vectors)


def score_grouped(x: ForwardVector, index: GroupedIndex) -> tuple[dict[int, float], int]:
    """Scores for every target plus the number of group entries visited.

    Estimate-block and residual-block contributions are accumulated
    separately and added at the end, so each score is bit-identical to
    ``estimate_from_vectors(x, y^t)``.
    """
    groups = index.groups
    n = index.n
    p_score = dict.fromkeys(index.targets, 0.0)
    r_score = dict.fromkeys(index.targets, 0.0)
    touched = 0
    for v, xv in x.p_block():
        entry = groups.get(v)
        if entry is not None:
            ts, ys = entry
            touched += len(ts)
            for t, y in zip(ts, ys):
                p_score[t] += xv * y
    for v, xv in x.r_block():
        entry = groups.get(n + v)
        if entry is not None:
            ts, ys = entry
            touched += len(ts)
            for t, y in zip(ts, ys):
                r_score[t] += xv * y
    return {t: p_score[t] + r_score[t] for t in index.targets}, touched


def rank_targets_grouped(
    g: Graph,
    alpha: float,
    source,
    index: GroupedIndex,
    w: int,
    rng,
    *,
    forward: ForwardVector | None = None,
) -> SearchResult:
    """Rank the index's targets by ``<x_s, y^t>`` using ``w`` fresh walks (or ``forward``)."""
    if forward is None:
        forward = forward_vector(g, alpha, as_source(source), w, make_rng(rng))
    scores, touched = score_grouped(forward, index)
    ranking = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return SearchResult(ranking, walks=forward.w, extra={"touched": touched, "forward": forward})


__all__ = [
    "GroupedIndex",
    "PushBudgetExceeded",
    "StorageStats",
    "build_grouped",
    "push_targets",
    "rank_targets_grouped",
    "regroup",
    "score_grouped",
    "storage_bound",
]
