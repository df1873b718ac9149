"""Exact PPR by power iteration; ground truth for accuracy tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, SourceDistribution, as_source

MAX_ORACLE_NODES = 20_000
DEFAULT_TOL = 1e-12


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ExactPpr:
    source: SourceDistribution
    vector: np.ndarray
    iterations: int
    residual: float

    def __getitem__(self, t: int) -> float:
        return float(self.vector[t])

    def mass(self, targets) -> float:
        return float(self.vector[list(targets)].sum())


def _check_size(g: Graph, max_nodes: int) -> None:
    if g.n > max_nodes:
        raise OracleTooLarge(f"oracle limited to {max_nodes} nodes, graph has {g.n}")


def exact_ppr(
    g: Graph,
    alpha: float,
    source,
    tol: float = DEFAULT_TOL,
    *,
    max_nodes: int = MAX_ORACLE_NODES,
) -> ExactPpr:
    """Iterate ``pi <- alpha*sigma + (1-alpha) * pi W`` until the L1 change drops below ``tol``.

    Starts from ``alpha*sigma`` (the first term of the power series), so
    the k-th change is exactly ``alpha (1-alpha)^k`` and the iteration
    count never exceeds ``log(1/tol)/log(1/(1-alpha)) + 1``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not tol > 0:
        raise ValueError("tol must be positive")
    _check_size(g, max_nodes)
    sigma_dist = as_source(source)
    sigma_dist.validate_for(g)
    sigma = np.zeros(g.n)
    sigma[list(sigma_dist.nodes)] = sigma_dist.probs
    wt = g.transition_matrix().T.tocsr()

    pi = alpha * sigma
    iterations = 0
    while True:
        nxt = alpha * sigma + (1 - alpha) * (wt @ pi)
        change = float(np.abs(nxt - pi).sum())
        pi = nxt
        iterations += 1
        if change < tol:
            break
    return ExactPpr(sigma_dist, pi, iterations, change)


def global_pagerank(g: Graph, alpha: float, tol: float = 1e-10, *, max_nodes: int = 10**7) -> np.ndarray:
    """PageRank with uniform teleport, i.e. PPR from the uniform source distribution."""
    uniform = SourceDistribution(tuple(range(g.n)), tuple([1.0 / g.n] * g.n))
    return exact_ppr(g, alpha, uniform, tol, max_nodes=max_nodes).vector


def exact_top_k(g: Graph, alpha: float, source, targets, k: int, *, tol: float = DEFAULT_TOL) -> list[tuple[int, float]]:
    """Top-``k`` of ``targets`` by exact PPR; ties broken by ascending id."""
    targets = sorted(set(int(t) for t in targets))
    if not 0 <= k <= len(targets):
        raise ValueError(f"k={k} outside [0, {len(targets)}]")
    pi = exact_ppr(g, alpha, source, tol).vector
    return rank_scores({t: float(pi[t]) for t in targets})[:k]


def rank_scores(scores: dict[int, float]) -> list[tuple[int, float]]:
    """Sort by score descending, node id ascending."""
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def max_iterations(alpha: float, tol: float = DEFAULT_TOL) -> int:
    return math.floor(math.log(1 / tol) / math.log(1 / (1 - alpha)) + 1)
