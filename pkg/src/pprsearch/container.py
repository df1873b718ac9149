"""Versioned binary container for precomputed indexes.

Layout (all integers little-endian)::

    b"PPRIDX" | u16 version | u32 header length | header JSON | payload | sha256

The header records the index kind, the graph fingerprint, ``alpha`` and
one entry per section (keyword) with its ``r_max``, target list and the
byte range of its arrays in the payload.  The trailing SHA-256 covers
everything before it.  Alias tables are never stored; they are rebuilt on
load.
"""
from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import asdict
from typing import BinaryIO, Mapping, Union

import numpy as np

from .graph import Graph
from .grouped_index import GroupedIndex, StorageStats
from .reverse_push import ReverseVector
from .sampler_search import SamplerIndex

MAGIC = b"PPRIDX"
VERSION = 1
_PREFIX = struct.Struct("<6sHI")

Index = Union[GroupedIndex, SamplerIndex]


class ContainerError(ValueError):
    pass


def _pack_groups(groups) -> list[np.ndarray]:
    coords = np.fromiter(groups.keys(), dtype="<i8", count=len(groups))
    sizes = np.fromiter((len(ts) for ts, _ in groups.values()), dtype="<i8", count=len(groups))
    offsets = np.zeros(len(groups) + 1, dtype="<i8")
    np.cumsum(sizes, out=offsets[1:])
    targets = np.fromiter((t for ts, _ in groups.values() for t in ts), dtype="<i8", count=int(offsets[-1]))
    values = np.fromiter((x for _, xs in groups.values() for x in xs), dtype="<f8", count=int(offsets[-1]))
    return [coords, offsets, targets, values]


def _unpack_groups(coords, offsets, targets, values):
    t = targets.tolist()
    x = values.tolist()
    o = offsets.tolist()
    return {v: (t[o[i]:o[i + 1]], x[o[i]:o[i + 1]]) for i, v in enumerate(coords.tolist())}


def _pack_rows(vectors: list[ReverseVector]) -> list[np.ndarray]:
    out = [
        np.array([y.target for y in vectors], dtype="<i8"),
        np.array([y.r_max_achieved for y in vectors], dtype="<f8"),
    ]
    for block in ("p", "r"):
        maps = [getattr(y, block) for y in vectors]
        offsets = np.zeros(len(maps) + 1, dtype="<i8")
        np.cumsum([len(mp) for mp in maps], out=offsets[1:])
        out.append(offsets)
        out.append(np.array([v for mp in maps for v in mp], dtype="<i8"))
        out.append(np.array([x for mp in maps for x in mp.values()], dtype="<f8"))
    return out


def _unpack_rows(arrays, r_max) -> list[ReverseVector]:
    targets, achieved, p_off, p_nodes, p_vals, r_off, r_nodes, r_vals = arrays
    vectors = []
    for i, t in enumerate(targets.tolist()):
        a, b = int(p_off[i]), int(p_off[i + 1])
        p = dict(zip(p_nodes[a:b].tolist(), p_vals[a:b].tolist()))
        a, b = int(r_off[i]), int(r_off[i + 1])
        r = dict(zip(r_nodes[a:b].tolist(), r_vals[a:b].tolist()))
        vectors.append(ReverseVector(t, p, r, float(achieved[i]), 0, 0, r_max))
    return vectors


def dumps(kind: str, graph: Graph, alpha: float, sections: Mapping[str, object]) -> bytes:
    """Serialize ``{name: index}``; ``kind`` is ``grouped``, ``sampling`` or ``reverse``.

    For ``reverse`` each value is ``(r_max, [ReverseVector, ...])``.
    """
    payload = io.BytesIO()
    entries = []
    for name, obj in sections.items():
        if kind == "reverse":
            r_max, vectors = obj
            vectors = sorted(vectors, key=lambda y: y.target)
            arrays = _pack_rows(vectors)
            targets = [y.target for y in vectors]
            stats = StorageStats.of(vectors)
        elif kind in ("grouped", "sampling"):
            expected = GroupedIndex if kind == "grouped" else SamplerIndex
            if not isinstance(obj, expected):
                raise TypeError(f"section {name!r} is {type(obj).__name__}, expected {expected.__name__}")
            r_max, targets, stats = obj.r_max, list(obj.targets), obj.stats
            arrays = _pack_groups(obj.groups)
            if kind == "sampling":
                arrays.append(np.fromiter(obj.aggregate.values(), dtype="<f8", count=len(obj.aggregate)))
        else:
            raise ValueError(f"unknown index kind {kind!r}")
        start = payload.tell()
        lengths = []
        for arr in arrays:
            data = np.ascontiguousarray(arr).tobytes()
            lengths.append(len(data))
            payload.write(data)
        entries.append({
            "name": name,
            "r_max": r_max,
            "targets": targets,
            "offset": start,
            "arrays": lengths,
            "stats": asdict(stats),
        })
    header = {
        "kind": kind,
        "graph": graph.fingerprint(),
        "alpha": alpha,
        "sections": entries,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    body = _PREFIX.pack(MAGIC, VERSION, len(head)) + head + payload.getvalue()
    return body + hashlib.sha256(body).digest()


_DTYPES = {
    "grouped": ["<i8", "<i8", "<i8", "<f8"],
    "sampling": ["<i8", "<i8", "<i8", "<f8", "<f8"],
    "reverse": ["<i8", "<f8", "<i8", "<i8", "<f8", "<i8", "<i8", "<f8"],
}


def loads(data: bytes, graph: Graph | None = None) -> tuple[str, float, dict[str, object]]:
    """Inverse of :func:`dumps`; returns ``(kind, alpha, sections)``.

    Raises :class:`ContainerError` on bad magic, unsupported version,
    checksum mismatch, or (if ``graph`` is given) a different graph.
    """
    if len(data) < _PREFIX.size + 32:
        raise ContainerError("container truncated")
    body, digest = data[:-32], data[-32:]
    magic, version, head_len = _PREFIX.unpack_from(body)
    if magic != MAGIC:
        raise ContainerError("not an index container (bad magic)")
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    if hashlib.sha256(body).digest() != digest:
        raise ContainerError("checksum mismatch: container is corrupted")
    start = _PREFIX.size
    try:
        header = json.loads(body[start:start + head_len])
    except ValueError as exc:
        raise ContainerError(f"bad header: {exc}") from None
    kind = header["kind"]
    if graph is not None and header["graph"] != graph.fingerprint():
        raise ContainerError("index was built for a different graph")
    payload = memoryview(body)[start + head_len:]
    n = header["graph"]["n"]
    alpha = header["alpha"]
    sections: dict[str, object] = {}
    for entry in header["sections"]:
        pos = entry["offset"]
        arrays = []
        for nbytes, dt in zip(entry["arrays"], _DTYPES[kind]):
            arrays.append(np.frombuffer(payload[pos:pos + nbytes], dtype=dt))
            pos += nbytes
        stats = StorageStats(**entry["stats"])
        r_max = entry["r_max"]
        if kind == "reverse":
            sections[entry["name"]] = (r_max, _unpack_rows(arrays, r_max))
            continue
        groups = _unpack_groups(*arrays[:4])
        if kind == "grouped":
            sections[entry["name"]] = GroupedIndex(n, alpha, r_max, tuple(entry["targets"]), groups, stats)
        else:
            idx = SamplerIndex.from_groups(n, alpha, r_max, entry["targets"], groups, stats)
            if idx.aggregate != dict(zip(arrays[0].tolist(), arrays[4].tolist())):
                raise ContainerError(f"section {entry['name']!r}: stored aggregate disagrees with groups")
            sections[entry["name"]] = idx
    return kind, alpha, sections


def save(path, kind: str, graph: Graph, alpha: float, sections) -> int:
    data = dumps(kind, graph, alpha, sections)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load(path, graph: Graph | None = None):
    with open(path, "rb") as fh:
        return loads(fh.read(), graph)


def read_from(stream: BinaryIO, graph: Graph | None = None):
    return loads(stream.read(), graph)
