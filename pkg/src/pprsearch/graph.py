"""Immutable directed weighted graph with out- and in-adjacency.

Nodes are dense integer ids ``0..n-1``.  Out-weights are normalized so
that every row sums to one; nodes without out-edges receive a self-loop of
weight one at construction time (the count is kept in ``dangling``).
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .alias import _vose

MAX_NODE_ID = 2**31 - 2
ROW_SUM_TOL = 1e-9


class GraphFormatError(ValueError):
    """Malformed edge-list or keyword input; ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class Graph:
    """Directed graph in dual CSR form.

    ``out_indptr/out_indices/out_weights`` hold rows sorted by neighbor id;
    ``in_indptr/in_indices/in_weights`` hold the exact transpose, where
    ``in_weights`` carries the weight of the original edge ``u -> v``.
    """

    def __init__(self, n: int, src, dst, weights, *, dangling: int = 0):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if n < 1:
            raise ValueError("graph needs at least one node")
        if not (len(src) == len(dst) == len(weights)):
            raise ValueError("edge arrays differ in length")
        if len(src) and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
            raise ValueError("edge endpoint outside [0, n)")
        if np.any(~(weights > 0)):
            raise ValueError("edge weights must be strictly positive")

        order = np.lexsort((dst, src))
        src, dst, weights = src[order], dst[order], weights[order]
        if len(src) > 1:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if dup.any():
                i = int(np.flatnonzero(dup)[0])
                raise ValueError(f"duplicate edge {src[i]}->{dst[i]}")

        self.n = int(n)
        self.m = int(len(src))
        self.dangling = int(dangling)
        self.out_indptr = _indptr(src, n)
        self.out_indices = dst
        self.out_weights = weights

        rorder = np.lexsort((src, dst))
        self.in_indptr = _indptr(dst[rorder], n)
        self.in_indices = src[rorder]
        self.in_weights = weights[rorder]
        for arr in (self.out_indptr, self.out_indices, self.out_weights,
                    self.in_indptr, self.in_indices, self.in_weights):
            arr.flags.writeable = False

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        weights: Sequence[float] | None = None,
    ) -> "Graph":
        """Build from an edge list, normalizing out-weights.

        Unweighted edges get ``1/outdeg(u)``.  Sinks get a weight-one
        self-loop.
        """
        edges = list(edges)
        src = np.fromiter((u for u, _ in edges), dtype=np.int64, count=len(edges))
        dst = np.fromiter((v for _, v in edges), dtype=np.int64, count=len(edges))
        if weights is None:
            w = np.ones(len(edges))
        else:
            w = np.asarray(weights, dtype=np.float64)
            if len(w) != len(edges):
                raise ValueError("weights and edges differ in length")
            if np.any(~(w > 0)):
                raise ValueError("edge weights must be strictly positive")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoint outside [0, n)")

        outdeg = np.bincount(src, minlength=n)
        sinks = np.flatnonzero(outdeg == 0)
        src = np.concatenate([src, sinks])
        dst = np.concatenate([dst, sinks])
        w = np.concatenate([w, np.ones(len(sinks))])
        rowsum = np.bincount(src, weights=w, minlength=n)
        return cls(n, src, dst, w / rowsum[src], dangling=len(sinks))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, dangling={self.dangling})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.out_indptr, other.out_indptr)
            and np.array_equal(self.out_indices, other.out_indices)
            and np.array_equal(self.out_weights, other.out_weights)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def avg_degree(self) -> float:
        return self.m / self.n

    def out_degree(self, u: int) -> int:
        return int(self.out_indptr[u + 1] - self.out_indptr[u])

    def in_degree(self, v: int) -> int:
        return int(self.in_indptr[v + 1] - self.in_indptr[v])

    @cached_property
    def in_degrees(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    def out_neighbors(self, u: int) -> list[tuple[int, float]]:
        lo, hi = self.out_indptr[u], self.out_indptr[u + 1]
        return list(zip(self.out_indices[lo:hi].tolist(), self.out_weights[lo:hi].tolist()))

    def in_neighbors(self, v: int) -> list[tuple[int, float]]:
        lo, hi = self.in_indptr[v], self.in_indptr[v + 1]
        return list(zip(self.in_indices[lo:hi].tolist(), self.in_weights[lo:hi].tolist()))

    @property
    def out_adj(self) -> list[list[tuple[int, float]]]:
        return [self.out_neighbors(u) for u in range(self.n)]

    @property
    def in_adj(self) -> list[list[tuple[int, float]]]:
        return [self.in_neighbors(v) for v in range(self.n)]

    def edges(self) -> list[tuple[int, int, float]]:
        src = np.repeat(np.arange(self.n), np.diff(self.out_indptr))
        return list(zip(src.tolist(), self.out_indices.tolist(), self.out_weights.tolist()))

    @cached_property
    def in_lists(self) -> list[tuple[list[int], list[float]]]:
        """Per-node ``(in_neighbors, weights)`` as Python lists for tight push loops."""
        idx = self.in_indices.tolist()
        wts = self.in_weights.tolist()
        ptr = self.in_indptr.tolist()
        return [(idx[ptr[v]:ptr[v + 1]], wts[ptr[v]:ptr[v + 1]]) for v in range(self.n)]

    @cached_property
    def out_alias(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-row alias tables flattened onto the out-CSR layout.

        Returns ``(prob, alias)`` where ``alias`` holds absolute positions
        into ``out_indices``.
        """
        prob = np.ones(self.m)
        alias = np.arange(self.m, dtype=np.int64)
        ptr = self.out_indptr
        wts = self.out_weights
        for u in range(self.n):
            lo, hi = int(ptr[u]), int(ptr[u + 1])
            row = wts[lo:hi]
            if hi - lo <= 1 or np.all(row == row[0]):
                continue
            p, a, _ = _vose(row.tolist())
            prob[lo:hi] = p
            alias[lo:hi] = np.asarray(a) + lo
        prob.flags.writeable = False
        alias.flags.writeable = False
        return prob, alias

    def fingerprint(self) -> dict:
        """``{n, m, checksum}`` identifying the adjacency exactly."""
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        for arr in (self.out_indptr, self.out_indices):
            h.update(np.ascontiguousarray(arr, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.out_weights, dtype="<f8").tobytes())
        return {"n": self.n, "m": self.m, "checksum": h.hexdigest()}

    def transition_matrix(self):
        """Row-stochastic ``scipy.sparse.csr_matrix`` W with ``W[u, v] = w_{u,v}``."""
        import scipy.sparse as sp

        return sp.csr_matrix(
            (self.out_weights, self.out_indices, self.out_indptr), shape=(self.n, self.n)
        )


def _indptr(sorted_rows: np.ndarray, n: int) -> np.ndarray:
    counts = np.bincount(sorted_rows, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr


# -- ingestion ---------------------------------------------------------------

_NODES_HEADER = re.compile(r"#\s*nodes\s+(\S+)\s*$")


def load_edge_list(stream: TextIO, weighted: bool = False) -> Graph:
    """Parse a TAB-separated edge list.

    Lines are ``u<TAB>v`` or ``u<TAB>v<TAB>w``; ``#`` starts a comment; an
    optional first line ``#nodes N`` fixes the node count so trailing
    isolated ids are allowed.  Any error rejects the whole load.
    """
    declared_n = None
    src: list[int] = []
    dst: list[int] = []
    wts: list[float] = []
    seen: set[tuple[int, int]] = set()
    first = True
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            match = _NODES_HEADER.match(line)
            if match and first:
                try:
                    declared_n = int(match.group(1))
                except ValueError:
                    raise GraphFormatError(f"bad node count {match.group(1)!r}", lineno)
                if declared_n < 1 or declared_n > MAX_NODE_ID + 1:
                    raise GraphFormatError(f"node count {declared_n} out of range", lineno)
            first = False
            continue
        first = False
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) not in (2, 3) or (len(parts) == 3 and not weighted):
            raise GraphFormatError(f"expected 'u<TAB>v{'<TAB>w' if weighted else ''}', got {line!r}", lineno)
        u, v = _parse_id(parts[0], lineno), _parse_id(parts[1], lineno)
        if declared_n is not None and max(u, v) >= declared_n:
            raise GraphFormatError(f"node id {max(u, v)} >= declared node count {declared_n}", lineno)
        if weighted:
            if len(parts) != 3:
                raise GraphFormatError("missing edge weight", lineno)
            try:
                w = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"bad weight {parts[2]!r}", lineno)
            if w < 0:
                raise GraphFormatError(f"negative weight {w}", lineno)
            if not w > 0 or not np.isfinite(w):
                raise GraphFormatError(f"weight must be positive and finite, got {w}", lineno)
        else:
            w = 1.0
        if (u, v) in seen:
            raise GraphFormatError(f"duplicate edge {u}->{v}", lineno)
        seen.add((u, v))
        src.append(u)
        dst.append(v)
        wts.append(w)

    n = declared_n if declared_n is not None else (1 + max(max(src, default=-1), max(dst, default=-1)))
    if n < 1:
        raise GraphFormatError("edge list is empty")
    return Graph.from_edges(n, zip(src, dst), wts)


def _parse_id(token: str, lineno: int) -> int:
    try:
        x = int(token)
    except ValueError:
        raise GraphFormatError(f"bad node id {token!r}", lineno)
    if x < 0:
        raise GraphFormatError(f"negative node id {x}", lineno)
    if x > MAX_NODE_ID:
        raise GraphFormatError(f"node id {x} overflows", lineno)
    return x


def write_edge_list(g: Graph, stream: TextIO) -> None:
    """Write ``g`` in the weighted edge-list format (with a ``#nodes`` header)."""
    stream.write(f"#nodes {g.n}\n")
    for u, v, w in g.edges():
        stream.write(f"{u}\t{v}\t{w!r}\n")


@dataclass(frozen=True)
class KeywordMap:
    """keyword -> sorted target ids, plus the inverse node -> keywords."""

    targets_by_keyword: Mapping[str, tuple[int, ...]]
    keywords_by_node: Mapping[int, tuple[str, ...]] = field(repr=False)

    def targets(self, keyword: str) -> list[int]:
        try:
            return list(self.targets_by_keyword[keyword])
        except KeyError:
            raise KeyError(f"unknown keyword {keyword!r}") from None

    def keywords(self) -> list[str]:
        return sorted(self.targets_by_keyword)

    @property
    def gamma(self) -> int:
        """Maximum number of keywords attached to any node."""
        return max((len(k) for k in self.keywords_by_node.values()), default=0)


def load_keywords(stream: TextIO, n: int | None = None) -> KeywordMap:
    """Parse ``node<TAB>kw1,kw2,...`` lines; ids ``>= n`` are rejected when ``n`` is given."""
    by_kw: dict[str, set[int]] = {}
    by_node: dict[int, list[str]] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise GraphFormatError(f"expected 'node<TAB>keywords', got {line!r}", lineno)
        node = _parse_id(parts[0], lineno)
        if n is not None and node >= n:
            raise GraphFormatError(f"unknown node id {node} (graph has {n} nodes)", lineno)
        kws = [k.strip() for k in parts[1].split(",") if k.strip()]
        if not kws:
            raise GraphFormatError("no keywords", lineno)
        for kw in kws:
            by_kw.setdefault(kw, set()).add(node)
            lst = by_node.setdefault(node, [])
            if kw not in lst:
                lst.append(kw)
    return KeywordMap(
        {kw: tuple(sorted(nodes)) for kw, nodes in sorted(by_kw.items())},
        {node: tuple(kws) for node, kws in sorted(by_node.items())},
    )


# -- source distributions ----------------------------------------------------


@dataclass(frozen=True)
class SourceDistribution:
    """A start node or a sparse probability vector over start nodes."""

    nodes: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if not self.nodes or len(self.nodes) != len(self.probs):
            raise ValueError("source distribution needs matching, nonempty nodes and probs")
        if any(p < 0 for p in self.probs):
            raise ValueError("source probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError(f"source probabilities sum to {sum(self.probs)!r}, not 1")
        if list(self.nodes) != sorted(set(self.nodes)):
            raise ValueError("source nodes must be sorted and unique")

    @classmethod
    def single(cls, s: int) -> "SourceDistribution":
        return cls((int(s),), (1.0,))

    @classmethod
    def from_mapping(cls, sigma: Mapping[int, float]) -> "SourceDistribution":
        items = sorted((int(k), float(v)) for k, v in sigma.items() if v != 0)
        return cls(tuple(k for k, _ in items), tuple(v for _, v in items))

    @property
    def is_single(self) -> bool:
        return len(self.nodes) == 1

    def items(self) -> list[tuple[int, float]]:
        return list(zip(self.nodes, self.probs))

    def validate_for(self, g: Graph) -> None:
        if self.nodes[-1] >= g.n:
            raise ValueError(f"source node {self.nodes[-1]} outside graph with {g.n} nodes")


def as_source(source) -> SourceDistribution:
    """Coerce an int, mapping or ``SourceDistribution``."""
    if isinstance(source, SourceDistribution):
        return source
    if isinstance(source, Mapping):
        return SourceDistribution.from_mapping(source)
    return SourceDistribution.single(int(source))


# -- synthetic graphs --------------------------------------------------------


def generate_synthetic(n: int, model: str, seed: int = 0, **params) -> Graph:
    """Deterministic test graphs.

    Models:
      ``cycle``                      0->1->...->n-1->0
      ``erdos_renyi`` (p)            each ordered pair u != v independently
      ``directed_power_law`` (exponent, min_degree=2)
          out-degrees drawn from a Zipf law with ``exponent``; heads chosen
          proportionally to a power-law in-weight (Chung-Lu style) over a
          random node relabeling.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if model == "cycle":
        nodes = np.arange(n)
        return Graph.from_edges(n, zip(nodes.tolist(), ((nodes + 1) % n).tolist()))
    if model == "erdos_renyi":
        p = params.get("p")
        if p is None or not 0 <= p <= 1:
            raise ValueError("erdos_renyi needs 0 <= p <= 1")
        mask = rng.random((n, n)) < p
        np.fill_diagonal(mask, False)
        src, dst = np.nonzero(mask)
        return Graph.from_edges(n, zip(src.tolist(), dst.tolist()))
    if model == "directed_power_law":
        exponent = params.get("exponent", 2.2)
        min_degree = int(params.get("min_degree", 2))
        if exponent <= 1:
            raise ValueError("power-law exponent must exceed 1")
        return _power_law(n, exponent, min_degree, rng)
    raise ValueError(f"unknown model {model!r}")


def _power_law(n: int, exponent: float, min_degree: int, rng: np.random.Generator) -> Graph:
    if n == 1:
        return Graph.from_edges(1, [])
    label = rng.permutation(n)
    in_weight = (np.arange(1, n + 1, dtype=np.float64)) ** (-1.0 / (exponent - 1.0))
    cdf = np.cumsum(in_weight[label.argsort()])
    cdf /= cdf[-1]
    outdeg = np.minimum(min_degree * rng.zipf(exponent, size=n), n - 1)
    src: list[np.ndarray] = []
    dst: list[np.ndarray] = []
    for u in range(n):
        d = int(outdeg[u])
        chosen = np.empty(0, dtype=np.int64)
        draws = 2 * d + 4
        if d > 32:
            p = np.diff(cdf, prepend=0.0)
            p[u] = 0.0
            chosen = rng.choice(n, size=d, replace=False, p=p / p.sum())
        while len(chosen) < d:
            cand = np.searchsorted(cdf, rng.random(draws), side="right")
            cand = cand[(cand != u) & (cand < n)]
            _, first = np.unique(np.concatenate([chosen, cand]), return_index=True)
            merged = np.concatenate([chosen, cand])[np.sort(first)]
            chosen = merged[:d]
            draws *= 2
        src.append(np.full(d, u))
        dst.append(chosen)
    s = np.concatenate(src)
    t = np.concatenate(dst)
    return Graph.from_edges(n, zip(s.tolist(), t.tolist()))
