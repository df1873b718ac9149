"""Desk-scale PPR-search experiment: runtime and precision@k versus |T|.

For each target-set size, random target sets and random sources are
drawn; every method answers the same (T, s) queries.  Graph loading and
index construction happen before timing starts.
"""
from __future__ import annotations

import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bidirectional import EstimatorParams, bidirectional_ppr
from .graph import Graph
from .grouped_index import build_grouped, rank_targets_grouped
from .oracle import OracleTooLarge, exact_ppr, global_pagerank, rank_scores
from .sampler_search import adaptive_r_max, build_sampler_index, power_law_delta, sample_and_rank
from .walks import SearchResult, make_rng, monte_carlo_search, walk_endpoints

log = logging.getLogger(__name__)

METHODS = ("mc", "per-target", "grouped", "sampling")


@dataclass(frozen=True)
class SearchSetup:
    """Per-target-set parameters derived from the power-law model."""

    size: int
    targets: tuple[int, ...]
    pi_T: float
    delta: float
    r_max: float
    w: int
    mc_hits: int


def plan_target_set(
    g: Graph,
    targets: Sequence[int],
    pagerank: np.ndarray,
    *,
    walk_budget: int,
    c: float = 20.0,
    beta: float = 0.77,
    k: int = 3,
    mc_factor: float = 40.0,
) -> SearchSetup:
    """delta from the power-law model with ``pi_s(T) = |T|/n``; r_max from the walk budget.

    ``pi_T`` for r_max is the global PageRank of T.  Monte-Carlo is asked
    for ``mc_factor * (|T|/n) / delta`` hits and capped at
    ``mc_factor / delta`` walks.
    """
    size = len(targets)
    pi_T = float(pagerank[list(targets)].sum())
    delta = power_law_delta(size, size / g.n, min(k, size), beta)
    r_max = adaptive_r_max(size, pi_T, walk_budget, beta, min(k, size), c)
    w = max(1, math.ceil(c * r_max / delta))
    mc_hits = max(1, math.ceil(mc_factor * (size / g.n) / delta))
    return SearchSetup(size, tuple(sorted(targets)), pi_T, delta, r_max, w, mc_hits)


def per_target_search(
    g: Graph,
    alpha: float,
    source,
    targets: Iterable[int],
    params: EstimatorParams,
    rng,
) -> SearchResult:
    """Rank targets by one independent bidirectional estimate each."""
    rng = make_rng(rng)
    scores = {}
    walks = pushes = 0
    for t in sorted(set(targets)):
        est = bidirectional_ppr(g, source, t, params, rng)
        scores[t] = est.value
        walks += est.w
        pushes += est.reverse.push_count
    return SearchResult(rank_scores(scores), walks=walks, pushes=pushes)


def calibrate_costs(g: Graph, alpha: float, rng, *, walks: int = 20000, targets: int = 20) -> tuple[float, float]:
    """Measured seconds per walk and per push on ``g``."""
    from .reverse_push import approx_contributions

    rng = make_rng(rng)
    starts = rng.integers(0, g.n, size=16)
    t0 = time.perf_counter()
    for s in starts:
        walk_endpoints(g, alpha, int(s), walks // 16, rng)
    walk_cost = (time.perf_counter() - t0) / walks
    pushes = 0
    t0 = time.perf_counter()
    for t in rng.integers(0, g.n, size=targets):
        pushes += approx_contributions(g, alpha, int(t), 1e-3).push_count
    push_cost = (time.perf_counter() - t0) / max(pushes, 1)
    return walk_cost, push_cost


def precision_at_k(found: Sequence[int], exact: Sequence[int]) -> float:
    if not exact:
        return 1.0
    return len(set(found) & set(exact)) / len(exact)


@dataclass
class BenchRecord:
    method: str
    size: int
    median_ms: float
    precision: float | None
    walks: float
    pushes: float
    index_bytes: int
    queries: int
    times_ms: list[float] = field(default_factory=list, repr=False)
    precisions: list[float] = field(default_factory=list, repr=False)

    def as_line(self) -> str:
        prec = "unavailable" if self.precision is None else f"{self.precision:.4f}"
        return (
            f"method={self.method} T={self.size} median_ms={self.median_ms:.3f} "
            f"precision_at_k={prec} walks={self.walks:.0f} pushes={self.pushes:.0f} "
            f"index_bytes={self.index_bytes} queries={self.queries}"
        )


def _index_bytes(index) -> int:
    # 8-byte target id + 8-byte value per entry, plus per-coordinate overhead
    return 16 * index.stored_entries() + 24 * len(index.groups)


def run_search_bench(
    g: Graph,
    sizes: Sequence[int],
    methods: Sequence[str] = METHODS,
    *,
    alpha: float = 0.2,
    c: float = 20.0,
    beta: float = 0.77,
    k: int = 3,
    walk_budget: int = 10_000,
    n_target_sets: int = 10,
    n_sources: int = 10,
    mc_factor: float = 40.0,
    seed: int = 0,
    precision: bool = True,
    warmup: bool = True,
) -> list[BenchRecord]:
    """Median query time and precision@k per (method, |T|)."""
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    rng = make_rng(seed)
    pagerank = global_pagerank(g, alpha)
    walk_cost, push_cost = calibrate_costs(g, alpha, rng) if "per-target" in methods else (1.0, None)
    records = []
    for size in sizes:
        if size > g.n:
            raise ValueError(f"|T|={size} exceeds n={g.n}")
        times = {m: [] for m in methods}
        precs = {m: [] for m in methods}
        walks = {m: [] for m in methods}
        pushes = {m: [] for m in methods}
        index_bytes = {m: 0 for m in methods}
        for _ in range(n_target_sets):
            T = rng.choice(g.n, size=size, replace=False)
            setup = plan_target_set(g, T.tolist(), pagerank, walk_budget=walk_budget,
                                    c=c, beta=beta, k=k, mc_factor=mc_factor)
            kk = min(k, size)
            grouped = build_grouped(g, alpha, setup.targets, setup.r_max) if "grouped" in methods else None
            sampler = build_sampler_index(g, alpha, setup.targets, setup.r_max) if "sampling" in methods else None
            if grouped is not None:
                index_bytes["grouped"] = max(index_bytes["grouped"], _index_bytes(grouped))
            if sampler is not None:
                index_bytes["sampling"] = max(index_bytes["sampling"], _index_bytes(sampler))
            per_target_params = EstimatorParams(
                alpha=alpha, delta=setup.delta, c=c, r_max=0.0, balanced=True,
                walk_cost=walk_cost, push_cost=push_cost,
            )
            queries = {
                "mc": lambda s, r: monte_carlo_search(
                    g, alpha, s, setup.targets, setup.mc_hits, r, max_walks=math.ceil(mc_factor / setup.delta)),
                "per-target": lambda s, r: per_target_search(g, alpha, s, setup.targets, per_target_params, r),
                "grouped": lambda s, r: rank_targets_grouped(g, alpha, s, grouped, setup.w, r),
                "sampling": lambda s, r: sample_and_rank(g, alpha, s, sampler, setup.w, setup.w, r),
            }
            for _ in range(n_sources):
                s = int(rng.integers(g.n))
                exact = None
                if precision:
                    try:
                        pi = exact_ppr(g, alpha, s).vector
                        exact = [t for t, _ in rank_scores({t: float(pi[t]) for t in setup.targets})[:kk]]
                    except OracleTooLarge:
                        exact = None
                for m in methods:
                    qseed = int(rng.integers(2**63))
                    if warmup and not times[m]:
                        queries[m](s, make_rng(qseed))
                    t0 = time.perf_counter()
                    res = queries[m](s, make_rng(qseed))
                    times[m].append(1e3 * (time.perf_counter() - t0))
                    walks[m].append(res.walks)
                    pushes[m].append(res.pushes)
                    if exact is not None:
                        precs[m].append(precision_at_k(res.top(kk), exact))
        for m in methods:
            rec = BenchRecord(
                m, size, statistics.median(times[m]),
                statistics.median(precs[m]) if precs[m] else None,
                statistics.median(walks[m]), statistics.median(pushes[m]),
                index_bytes[m], len(times[m]), times[m], precs[m],
            )
            log.info(rec.as_line())
            records.append(rec)
    return records


def report_tables(records: Sequence[BenchRecord]) -> tuple[str, str]:
    """Runtime table (|T| x method -> median ms) and precision table."""
    methods = list(dict.fromkeys(r.method for r in records))
    sizes = sorted({r.size for r in records})
    by = {(r.method, r.size): r for r in records}
    head = "T\t" + "\t".join(methods) + "\n"
    runtime = head + "".join(
        f"{s}\t" + "\t".join(f"{by[m, s].median_ms:.3f}" for m in methods) + "\n" for s in sizes
    )
    precision = head + "".join(
        f"{s}\t" + "\t".join(
            "nan" if by[m, s].precision is None else f"{by[m, s].precision:.4f}" for m in methods
        ) + "\n"
        for s in sizes
    )
    return runtime, precision
