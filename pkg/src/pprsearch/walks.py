"""Geometric-length random walks, forward vectors, and the Monte-Carlo search baseline.

Walks stop *before* each step with probability ``alpha``, so the start
node is itself the endpoint with probability ``alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, SourceDistribution, as_source


def make_rng(seed=None) -> np.random.Generator:
    """Seedable generator; passes an existing ``Generator`` through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _start_nodes(source: SourceDistribution, count: int, rng: np.random.Generator) -> np.ndarray:
    if source.is_single:
        return np.full(count, source.nodes[0], dtype=np.int64)
    nodes = np.asarray(source.nodes, dtype=np.int64)
    cdf = np.cumsum(source.probs)
    idx = np.searchsorted(cdf, rng.random(count) * cdf[-1], side="right")
    return nodes[np.minimum(idx, len(nodes) - 1)]


def walk_endpoints(g: Graph, alpha: float, source, count: int, rng) -> np.ndarray:
    """Endpoints of ``count`` independent walks, as an int64 array in walk order."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rng = make_rng(rng)
    source = as_source(source)
    source.validate_for(g)
    pos = _start_nodes(source, count, rng)
    steps = rng.geometric(alpha, size=count) - 1
    prob, alias = g.out_alias
    indptr, indices = g.out_indptr, g.out_indices
    active = np.flatnonzero(steps > 0)
    while active.size:
        u = pos[active]
        lo = indptr[u]
        deg = indptr[u + 1] - lo
        slot = lo + (rng.random(active.size) * deg).astype(np.int64)
        slot = np.minimum(slot, lo + deg - 1)
        keep = rng.random(active.size) < prob[slot]
        edge = np.where(keep, slot, alias[slot])
        pos[active] = indices[edge]
        steps[active] -= 1
        active = active[steps[active] > 0]
    return pos


def sample_walk(g: Graph, alpha: float, source, rng) -> int:
    """Endpoint of a single walk."""
    return int(walk_endpoints(g, alpha, source, 1, rng)[0])


def walk_lengths(alpha: float, count: int, rng) -> np.ndarray:
    """Number of steps taken by ``count`` walks (same law the walker uses)."""
    return make_rng(rng).geometric(alpha, size=count) - 1


@dataclass(frozen=True)
class ForwardVector:
    """``x_s = (sigma, endpoint_counts / w)`` over coordinates ``[0, 2n)``."""

    n: int
    source: SourceDistribution
    w: int
    endpoint_counts: dict[int, int] = field(repr=False)

    @property
    def empirical(self) -> dict[int, float]:
        return {v: c / self.w for v, c in self.endpoint_counts.items()}

    def p_block(self) -> list[tuple[int, float]]:
        return self.source.items()

    def r_block(self) -> list[tuple[int, float]]:
        """``(node, count/w)`` sorted by node."""
        w = self.w
        return [(v, c / w) for v, c in self.endpoint_counts.items()]

    def coordinates(self) -> list[tuple[int, float]]:
        """Nonzero entries of ``x_s`` keyed by coordinate in ``[0, 2n)``, ascending."""
        n = self.n
        return self.p_block() + [(n + v, x) for v, x in self.r_block()]

    def dense(self) -> np.ndarray:
        x = np.zeros(2 * self.n)
        for v, val in self.coordinates():
            x[v] = val
        return x


def forward_vector(g: Graph, alpha: float, source, w: int, rng) -> ForwardVector:
    """Sample ``w`` walks and record endpoint counts."""
    if w < 1:
        raise ValueError("need at least one walk")
    source = as_source(source)
    ends = walk_endpoints(g, alpha, source, w, rng)
    nodes, counts = np.unique(ends, return_counts=True)
    return ForwardVector(g.n, source, int(w), dict(zip(nodes.tolist(), counts.tolist())))


@dataclass
class SearchResult:
    """Ranking of a target set plus bookkeeping common to all search methods."""

    ranking: list[tuple[int, float]]
    walks: int = 0
    pushes: int = 0
    truncated: bool = False
    no_signal: bool = False
    extra: dict = field(default_factory=dict)

    def top(self, k: int) -> list[int]:
        return [t for t, _ in self.ranking[:k]]


def rank_counts(targets, counts: dict[int, float]) -> list[tuple[int, float]]:
    """All of ``targets`` by count descending, then id ascending."""
    return sorted(((t, counts.get(t, 0)) for t in targets), key=lambda kv: (-kv[1], kv[0]))


def monte_carlo_search(
    g: Graph,
    alpha: float,
    source,
    targets,
    n_samples: int,
    rng,
    *,
    max_walks: int | None = None,
    batch: int = 65536,
) -> SearchResult:
    """Sample walks until ``n_samples`` of them end inside ``targets``.

    Targets are ranked by hit count.  If ``max_walks`` (default
    ``1000 * n_samples``) runs out first the partial ranking is returned
    with ``truncated=True``.
    """
    targets = sorted(set(int(t) for t in targets))
    if not targets:
        raise ValueError("target set is empty")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = make_rng(rng)
    if max_walks is None:
        max_walks = 1000 * n_samples
    member = np.zeros(g.n, dtype=bool)
    member[targets] = True

    hits: list[np.ndarray] = []
    got = 0
    walks = 0
    while got < n_samples and walks < max_walks:
        size = min(batch, max_walks - walks)
        ends = walk_endpoints(g, alpha, source, size, rng)
        inside = np.flatnonzero(member[ends])
        need = n_samples - got
        if inside.size >= need:
            last = inside[need - 1]
            hits.append(ends[inside[:need]])
            walks += int(last) + 1
            got = n_samples
            break
        hits.append(ends[inside])
        got += inside.size
        walks += size

    counts: dict[int, int] = {}
    if hits:
        nodes, cnt = np.unique(np.concatenate(hits), return_counts=True)
        counts = dict(zip(nodes.tolist(), cnt.tolist()))
    return SearchResult(
        rank_counts(targets, counts),
        walks=walks,
        truncated=got < n_samples,
        extra={"hits": got},
    )


def mc_walks_for_delta(delta: float, factor: float = 40.0) -> int:
    """Monte-Carlo walk count ``factor/delta`` used in the search experiments."""
    return math.ceil(factor / delta)
