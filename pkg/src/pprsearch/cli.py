"""Command-line interface: estimate | precompute | search | bench | oracle.

Results go to stdout as ``key=value`` records; timings and diagnostics go
to stderr so that stdout is byte-identical across runs with a fixed seed.

Exit codes: 0 success, 1 no-signal or truncated result, 2 input error,
3 push budget exceeded.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import secrets
import sys
import time
from dataclasses import dataclass, field

from . import container
from .bench import METHODS as BENCH_METHODS
from .bench import report_tables, run_search_bench
from .bidirectional import (
    EstimatorParams,
    bidirectional_ppr,
    choose_c,
    default_r_max,
    estimate_from_vectors,
)
from .graph import Graph, GraphFormatError, KeywordMap, generate_synthetic, load_edge_list, load_keywords
from .grouped_index import (
    GroupedIndex,
    StorageStats,
    build_grouped,
    push_targets,
    rank_targets_grouped,
    storage_bound,
)
from .oracle import OracleTooLarge, exact_ppr, global_pagerank, rank_scores
from .reverse_push import DEFAULT_MAX_PUSHES, PushBudgetExceeded
from .sampler_search import SamplerIndex, adaptive_r_max, build_sampler_index, sample_and_rank
from .walks import SearchResult, forward_vector, make_rng, monte_carlo_search

EXIT_OK, EXIT_NO_SIGNAL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

SEARCH_METHODS = ("mc", "per-target", "grouped", "sampling", "oracle")


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    graph: str | None = None
    weighted: bool = False
    keywords: str | None = None
    alpha: float = 0.2
    delta: float | None = None
    epsilon: float = 0.5
    pfail: float = 0.01
    c: float | None = None
    rmax: float | None = None
    adaptive_rmax: tuple[float, int, float] | None = None
    walks: int | None = None
    samples: int | None = None
    seed: int | None = None
    method: str | None = None
    keyword: str | None = None
    targets: list[int] | None = None
    k: int = 3
    out: str | None = None
    source: int | None = None
    index: str | None = None
    balanced: bool = False
    parallel: int = 1
    max_pushes: int = DEFAULT_MAX_PUSHES
    rescore: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InputError("--alpha must lie in (0, 1)")
        if not (0 < self.epsilon <= 1 and 0 < self.pfail < 1):
            raise InputError("need 0 < --epsilon <= 1 and 0 < --pfail < 1")
        if self.delta is not None and not self.delta > 0:
            raise InputError("--delta must be positive")
        if self.rmax is not None and not self.rmax > 0:
            raise InputError("--rmax must be positive")
        if self.rmax is not None and self.adaptive_rmax is not None:
            raise InputError("give at most one of --rmax and --adaptive-rmax")
        if self.keyword is not None and self.targets is not None:
            raise InputError("give exactly one of --keyword and --targets")
        if self.k < 1:
            raise InputError("--k must be >= 1")

    def delta_for(self, g: Graph) -> float:
        return self.delta if self.delta is not None else 4.0 / g.n


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _adaptive(text: str) -> tuple[float, int, float]:
    try:
        beta, k, c = text.split(",")
        return float(beta), int(k), float(c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'beta,k,c', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="edge-list file (TAB separated)")
    common.add_argument("--weighted", action="store_true", help="edge list carries a third weight column")
    common.add_argument("--keywords", help="keyword file: node<TAB>kw1,kw2")
    common.add_argument("--alpha", type=float, default=0.2, help="teleport probability (default 0.2)")
    common.add_argument("--delta", type=float, help="minimum PPR to resolve (default 4/n)")
    common.add_argument("--epsilon", type=float, default=0.5, help="relative error (default 0.5)")
    common.add_argument("--pfail", type=float, default=0.01, help="failure probability (default 0.01)")
    common.add_argument("--c", type=float, help="walk-count constant")
    common.add_argument("--rmax", type=float, help="maximum residual")
    common.add_argument("--adaptive-rmax", type=_adaptive, metavar="BETA,K,C",
                        help="choose r_max per target set from the power-law model")
    common.add_argument("--walks", type=int, help="number of walks (or walk budget)")
    common.add_argument("--samples", type=int, help="number of samples")
    common.add_argument("--seed", type=int, help="random seed (default: fresh, printed)")
    common.add_argument("--keyword", help="keyword selecting the target set")
    common.add_argument("--targets", type=_int_list, help="comma-separated target ids")
    common.add_argument("--k", type=int, default=3, help="top-k to report (default 3)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--source", type=int, help="source node")
    common.add_argument("--max-pushes", type=int, default=DEFAULT_MAX_PUSHES)

    parser = argparse.ArgumentParser(prog="pprsearch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="estimate pi_s(t) for one pair")
    p.add_argument("--balanced", action="store_true", help="choose r_max dynamically by balancing work")
    p.add_argument("--walk-cost", type=float, default=1.0, help="cost units per walk (balanced mode)")
    p.add_argument("--push-cost", type=float, help="cost units per push (balanced mode)")

    p = sub.add_parser("precompute", parents=[common], help="build and save a search index")
    p.add_argument("--method", choices=("grouped", "sampling", "per-target"), required=True)
    p.add_argument("--parallel", type=int, default=1, help="worker processes for reverse pushes")

    p = sub.add_parser("search", parents=[common], help="top-k PPR search")
    p.add_argument("--method", choices=SEARCH_METHODS, required=True)
    p.add_argument("--index", help="container from 'precompute'")
    p.add_argument("--rescore", type=int, default=0, help="sampling: rescore the top N exactly")

    p = sub.add_parser("oracle", parents=[common], help="exact PPR by power iteration")

    p = sub.add_parser("bench", parents=[common], help="runtime/precision sweep over |T|")
    p.add_argument("--synthetic", type=int, help="use a synthetic power-law graph with this many nodes")
    p.add_argument("--sizes", type=_int_list, default=[10, 100, 1000])
    p.add_argument("--methods", default=",".join(BENCH_METHODS))
    p.add_argument("--target-sets", type=int, default=10)
    p.add_argument("--sources", type=int, default=10)
    return parser


def _config(args) -> RunConfig:
    names = RunConfig.__dataclass_fields__
    kwargs = {k: v for k, v in vars(args).items() if k in names and v is not None}
    extra = {k: v for k, v in vars(args).items() if k not in names}
    return RunConfig(**kwargs, extra=extra)


def _load_graph(cfg: RunConfig) -> Graph:
    if not cfg.graph:
        raise InputError("--graph is required")
    try:
        with open(cfg.graph, encoding="utf-8") as fh:
            return load_edge_list(fh, weighted=cfg.weighted)
    except OSError as exc:
        raise InputError(f"cannot read graph: {exc}") from None


def _load_keywords(cfg: RunConfig, g: Graph) -> KeywordMap:
    if not cfg.keywords:
        raise InputError("--keywords is required")
    try:
        with open(cfg.keywords, encoding="utf-8") as fh:
            return load_keywords(fh, g.n)
    except OSError as exc:
        raise InputError(f"cannot read keywords: {exc}") from None


def _targets(cfg: RunConfig, g: Graph) -> tuple[str, list[int]]:
    if cfg.keyword is not None:
        kw = _load_keywords(cfg, g)
        try:
            return cfg.keyword, kw.targets(cfg.keyword)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
    if cfg.targets:
        bad = [t for t in cfg.targets if not 0 <= t < g.n]
        if bad:
            raise InputError(f"target ids outside graph: {bad}")
        return "targets", sorted(set(cfg.targets))
    raise InputError("give --keyword or --targets")


def _source(cfg: RunConfig, g: Graph) -> int:
    if cfg.source is None:
        raise InputError("--source is required")
    if not 0 <= cfg.source < g.n:
        raise InputError(f"source {cfg.source} outside graph with {g.n} nodes")
    return cfg.source


def _seed(cfg: RunConfig) -> int:
    return cfg.seed if cfg.seed is not None else secrets.randbits(63)


def _set_r_max(cfg: RunConfig, g: Graph, targets: list[int], pagerank=None) -> float:
    if cfg.rmax is not None:
        return cfg.rmax
    beta, k, c = cfg.adaptive_rmax or (0.77, cfg.k, 20.0)
    if pagerank is None:
        pagerank = global_pagerank(g, cfg.alpha)
    pi_T = float(pagerank[targets].sum())
    return adaptive_r_max(len(targets), pi_T, cfg.walks or 10_000, beta, min(k, len(targets)), c)


def _emit(line: str) -> None:
    sys.stdout.write(line + "\n")


def _timing(label: str, seconds: float) -> None:
    sys.stderr.write(f"{label}_ms={1e3 * seconds:.3f}\n")


def cmd_estimate(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    s = _source(cfg, g)
    if not cfg.targets or len(cfg.targets) != 1:
        raise InputError("estimate needs exactly one target in --targets")
    if cfg.walks is not None or cfg.samples is not None:
        raise InputError("estimate sets w = ceil(c*r_max/delta); adjust --c, --rmax or --delta instead")
    t = cfg.targets[0]
    if not 0 <= t < g.n:
        raise InputError(f"target {t} outside graph with {g.n} nodes")
    seed = _seed(cfg)
    delta = cfg.delta_for(g)
    c = cfg.c if cfg.c is not None else choose_c(cfg.epsilon, cfg.pfail)
    if cfg.balanced:
        r_max = cfg.rmax or 0.0
    else:
        r_max = cfg.rmax if cfg.rmax is not None else default_r_max(g, cfg.epsilon, cfg.alpha, cfg.pfail)
    params = EstimatorParams(
        alpha=cfg.alpha, delta=delta, epsilon=cfg.epsilon, p_fail=cfg.pfail, c=c, r_max=r_max,
        balanced=cfg.balanced, walk_cost=cfg.extra.get("walk_cost", 1.0),
        push_cost=cfg.extra.get("push_cost"), max_pushes=cfg.max_pushes,
    )
    t0 = time.perf_counter()
    est = bidirectional_ppr(g, s, t, params, make_rng(seed))
    _timing("estimate", time.perf_counter() - t0)
    r_used = est.r_max_achieved if cfg.balanced else r_max
    _emit(
        f"source={s} target={t} value={est.value!r} p_term={est.p_term!r} "
        f"walk_term={est.walk_term!r} w={est.w} r_max={r_used!r} "
        f"guarantee={'yes' if est.within_guarantee else 'no'} seed={seed}"
    )
    return EXIT_OK


def _build_sections(cfg: RunConfig, g: Graph, kw: KeywordMap, kind: str):
    names = [cfg.keyword] if cfg.keyword is not None else kw.keywords()
    pagerank = None if cfg.rmax is not None else global_pagerank(g, cfg.alpha)
    sections = {}
    for name in names:
        try:
            targets = kw.targets(name)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
        r_max = _set_r_max(cfg, g, targets, pagerank)
        try:
            vectors = push_targets(g, cfg.alpha, targets, r_max, max_pushes=cfg.max_pushes,
                                   workers=cfg.parallel)
        except PushBudgetExceeded as exc:
            raise _budget(exc, name) from None
        if kind == "grouped":
            sections[name] = GroupedIndex.from_vectors(g.n, cfg.alpha, r_max, vectors)
        elif kind == "sampling":
            sections[name] = SamplerIndex.from_vectors(g.n, cfg.alpha, r_max, vectors)
        else:
            sections[name] = (r_max, vectors)
    return sections


def _budget(exc: PushBudgetExceeded, keyword: str) -> PushBudgetExceeded:
    err = PushBudgetExceeded(exc.target, exc.pushes)
    err.args = (f"keyword {keyword!r}: {exc}",)
    return err


def cmd_precompute(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    kw = _load_keywords(cfg, g)
    if not cfg.out:
        raise InputError("--out is required")
    kind = {"grouped": "grouped", "sampling": "sampling", "per-target": "reverse"}[cfg.method]
    t0 = time.perf_counter()
    sections = _build_sections(cfg, g, kw, kind)
    _timing("precompute", time.perf_counter() - t0)
    data = container.dumps(kind, g, cfg.alpha, sections)
    with open(cfg.out, "wb") as fh:
        fh.write(data)

    total_entries = 0
    min_r = math.inf
    for name, sec in sections.items():
        if kind == "reverse":
            r_max, vectors = sec
            stats = StorageStats.of(vectors)
            size = len(vectors)
        else:
            r_max, stats, size = sec.r_max, sec.stats, len(sec.targets)
        one = container.dumps(kind, g, cfg.alpha, {name: sec})
        total_entries += stats.stored_entries
        min_r = min(min_r, r_max)
        _emit(
            f"keyword={name} targets={size} r_max={r_max!r} pushes={stats.pushes} "
            f"touched={stats.touched_mass} entries={stats.stored_entries} bytes={len(one)}"
        )
    bound = storage_bound(g, cfg.alpha, min_r, max(kw.gamma, 1))
    _emit(
        f"file={os.path.basename(cfg.out)} bytes={len(data)} keywords={len(sections)} gamma={kw.gamma} "
        f"m={g.m} entries={total_entries} storage_bound={bound!r} "
        f"within_bound={'yes' if total_entries <= bound else 'no'}"
    )
    return EXIT_OK


def _index_section(cfg: RunConfig, g: Graph, name: str, kind: str):
    try:
        found_kind, alpha, sections = container.load(cfg.index, g)
    except OSError as exc:
        raise InputError(f"cannot read index: {exc}") from None
    if found_kind != kind:
        raise InputError(f"index holds a {found_kind!r} index, method needs {kind!r}")
    if alpha != cfg.alpha:
        raise InputError(f"index was built with alpha={alpha}, not {cfg.alpha}")
    if name not in sections:
        raise InputError(f"index has no section {name!r}")
    return sections[name]


def _print_ranking(res: SearchResult, k: int, label: str) -> None:
    for i, (t, score) in enumerate(res.ranking[:k], start=1):
        val = repr(score) if isinstance(score, float) else str(score)
        _emit(f"rank={i} target={t} {label}={val}")


def cmd_search(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    s = _source(cfg, g)
    name, targets = _targets(cfg, g)
    seed = _seed(cfg)
    method = cfg.method
    c = cfg.c if cfg.c is not None else 20.0
    delta = cfg.delta_for(g)
    rng = make_rng(seed)

    if method == "oracle":
        try:
            pi = exact_ppr(g, cfg.alpha, s).vector
        except OracleTooLarge as exc:
            raise InputError(str(exc)) from None
        res = SearchResult(rank_scores({t: float(pi[t]) for t in targets}))
        _emit(f"method=oracle source={s} targets={len(targets)}")
        _print_ranking(res, cfg.k, "score")
        return EXIT_OK

    if method == "mc":
        n_samples = cfg.samples or 1000
        t0 = time.perf_counter()
        res = monte_carlo_search(g, cfg.alpha, s, targets, n_samples, rng,
                                 max_walks=cfg.walks or 1000 * n_samples)
        _timing("search", time.perf_counter() - t0)
        _emit(f"method=mc source={s} targets={len(targets)} walks={res.walks} hits={res.extra['hits']} seed={seed}")
        _print_ranking(res, cfg.k, "count")
        if res.truncated:
            _emit("truncated=yes")
            return EXIT_NO_SIGNAL
        return EXIT_OK

    kind = {"per-target": "reverse", "grouped": "grouped", "sampling": "sampling"}[method]
    index = None
    if cfg.index:
        index = _index_section(cfg, g, name, kind)
        r_max = index[0] if kind == "reverse" else index.r_max
        if cfg.rmax is not None and cfg.rmax != r_max:
            raise InputError(f"index was built with r_max={r_max}, not {cfg.rmax}")
    else:
        r_max = _set_r_max(cfg, g, targets)
    w = cfg.walks or max(1, math.ceil(c * r_max / delta))

    t_build = time.perf_counter()
    if index is None:
        if kind == "grouped":
            index = build_grouped(g, cfg.alpha, targets, r_max, max_pushes=cfg.max_pushes)
        elif kind == "sampling":
            index = build_sampler_index(g, cfg.alpha, targets, r_max, max_pushes=cfg.max_pushes)
        else:
            index = (r_max, push_targets(g, cfg.alpha, targets, r_max, max_pushes=cfg.max_pushes))
    _timing("index", time.perf_counter() - t_build)

    t0 = time.perf_counter()
    if kind == "grouped":
        res = rank_targets_grouped(g, cfg.alpha, s, index, w, rng)
        label = "score"
    elif kind == "sampling":
        res = sample_and_rank(g, cfg.alpha, s, index, w, cfg.samples, rng, rescore_top=cfg.rescore)
        label = "count"
    else:
        x = forward_vector(g, cfg.alpha, s, w, rng)
        scores = {y.target: estimate_from_vectors(x, y) for y in index[1]}
        res = SearchResult(rank_scores(scores), walks=w)
        label = "score"
    _timing("search", time.perf_counter() - t0)

    _emit(f"method={method} source={s} targets={len(targets)} w={w} r_max={r_max!r} seed={seed}")
    if res.no_signal:
        _emit("result=empty reason=no-signal")
        return EXIT_NO_SIGNAL
    _print_ranking(res, cfg.k, label)
    if "rescored" in res.extra:
        for i, (t, score) in enumerate(res.extra["rescored"], start=1):
            _emit(f"rescored_rank={i} target={t} score={score!r}")
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    s = _source(cfg, g)
    if cfg.keyword is not None or cfg.targets:
        _, targets = _targets(cfg, g)
    else:
        targets = list(range(g.n))
    try:
        ex = exact_ppr(g, cfg.alpha, s)
    except OracleTooLarge as exc:
        raise InputError(str(exc)) from None
    _emit(f"source={s} iterations={ex.iterations} residual={ex.residual!r}")
    ranking = rank_scores({t: float(ex.vector[t]) for t in targets})
    for i, (t, v) in enumerate(ranking[:cfg.k], start=1):
        _emit(f"rank={i} target={t} score={v!r}")
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    synthetic = cfg.extra.get("synthetic")
    seed = _seed(cfg)
    if synthetic:
        g = generate_synthetic(synthetic, "directed_power_law", seed=seed)
    else:
        g = _load_graph(cfg)
    methods = [m for m in cfg.extra["methods"].split(",") if m]
    beta, k, c = cfg.adaptive_rmax or (0.77, cfg.k, cfg.c if cfg.c is not None else 20.0)
    records = run_search_bench(
        g, cfg.extra["sizes"], methods, alpha=cfg.alpha, c=c, beta=beta, k=k,
        walk_budget=cfg.walks or 10_000, n_target_sets=cfg.extra["target_sets"],
        n_sources=cfg.extra["sources"], seed=seed,
    )
    lines = [r.as_line() for r in records]
    for line in lines:
        _emit(line)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        runtime, precision = report_tables(records)
        with open(os.path.join(cfg.out, "report.txt"), "w") as fh:
            fh.write(f"graph_n={g.n} graph_m={g.m} seed={seed} walk_budget={cfg.walks or 10_000}\n")
            fh.write("\n".join(lines) + "\n")
        with open(os.path.join(cfg.out, "runtime.tsv"), "w") as fh:
            fh.write(runtime)
        with open(os.path.join(cfg.out, "precision.tsv"), "w") as fh:
            fh.write(precision)
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "precompute": cmd_precompute,
    "search": cmd_search,
    "oracle": cmd_oracle,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg)
    except PushBudgetExceeded as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BUDGET
    except (InputError, GraphFormatError, container.ContainerError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
