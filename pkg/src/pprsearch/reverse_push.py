"""Reverse local push (``Approx-Contributions``) from a target node.

Maintains estimate ``p`` and residual ``r`` such that for every source s

    pi_s(t) = p(s) + sum_v pi_s(v) * r(v)

holds after every push.
"""
from __future__ import annotations

import heapq
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .graph import Graph

DEFAULT_MAX_PUSHES = 50_000_000

PushCallback = Callable[[int, dict, dict], None]


class PushBudgetExceeded(RuntimeError):
    def __init__(self, target: int, pushes: int):
        self.target = target
        self.pushes = pushes
        super().__init__(f"reverse push from target {target} exceeded {pushes} pushes")


@dataclass(frozen=True)
class ReverseVector:
    """``y^t = (p, r)``; maps hold strictly positive entries only, sorted by node."""

    target: int
    p: dict[int, float] = field(repr=False)
    r: dict[int, float] = field(repr=False)
    r_max_achieved: float
    push_count: int
    touched_mass: int
    r_max: float | None = None

    @property
    def stored_entries(self) -> int:
        return len(self.p) + len(self.r)

    def coordinates(self, n: int) -> list[tuple[int, float]]:
        """Nonzero entries over ``[0, 2n)``: p-block first, then r-block."""
        return list(self.p.items()) + [(n + v, x) for v, x in self.r.items()]


def _finish(t, p, r, pushes, touched, r_max) -> ReverseVector:
    p_out = {v: x for v, x in sorted(p.items()) if x > 0}
    r_out = {v: x for v, x in sorted(r.items()) if x > 0}
    achieved = max(r_out.values(), default=0.0)
    return ReverseVector(t, p_out, r_out, achieved, pushes, touched, r_max)


def _check(g: Graph, alpha: float, t: int) -> None:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0 <= t < g.n:
        raise ValueError(f"target {t} outside [0, {g.n})")


def approx_contributions(
    g: Graph,
    alpha: float,
    t: int,
    r_max: float,
    *,
    max_pushes: int = DEFAULT_MAX_PUSHES,
    callback: PushCallback | None = None,
) -> ReverseVector:
    """Push from every node whose residual exceeds ``r_max`` until none does.

    Nodes are processed FIFO in the order their residual first crossed
    ``r_max``.  ``callback(v, p, r)`` runs after each push on the live maps.
    """
    _check(g, alpha, t)
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    in_lists = g.in_lists
    keep = 1.0 - alpha
    p: dict[int, float] = {}
    r: dict[int, float] = {t: 1.0}
    queue: deque[int] = deque()
    queued: set[int] = set()
    if 1.0 > r_max:
        queue.append(t)
        queued.add(t)
    pushes = 0
    touched = 0
    while queue:
        v = queue.popleft()
        queued.discard(v)
        if pushes >= max_pushes:
            raise PushBudgetExceeded(t, max_pushes)
        rv = r[v]
        r[v] = 0.0
        p[v] = p.get(v, 0.0) + alpha * rv
        scale = keep * rv
        us, ws = in_lists[v]
        for u, w in zip(us, ws):
            x = r.get(u, 0.0) + scale * w
            r[u] = x
            if x > r_max and u not in queued:
                queue.append(u)
                queued.add(u)
        pushes += 1
        touched += len(us)
        if callback is not None:
            callback(v, p, r)
    return _finish(t, p, r, pushes, touched, r_max)


def approx_contributions_balanced(
    g: Graph,
    alpha: float,
    t: int,
    delta: float,
    c: float,
    walk_cost: float,
    *,
    push_cost: float | None = None,
    r_max_floor: float = 0.0,
    wall_clock: bool = False,
    max_pushes: int = DEFAULT_MAX_PUSHES,
    callback: PushCallback | None = None,
) -> ReverseVector:
    """Push from the largest residual until reverse work would exceed predicted walk work.

    The predicted walk time at the current maximum residual ``r`` is
    ``walk_cost * c * r / delta``.  In the default counting mode the push
    time is ``pushes * push_cost`` (``push_cost`` defaults to
    ``alpha * walk_cost``, one walk step) and the loop stops before a push
    that would take it past the prediction.  With ``wall_clock=True``
    elapsed seconds are measured instead and ``walk_cost`` must be in
    seconds.  The loop also stops once no residual exceeds ``r_max_floor``.
    """
    _check(g, alpha, t)
    if not (delta > 0 and c > 0 and walk_cost > 0):
        raise ValueError("delta, c and walk_cost must be positive")
    if push_cost is None:
        push_cost = alpha * walk_cost
    in_lists = g.in_lists
    keep = 1.0 - alpha
    p: dict[int, float] = {}
    r: dict[int, float] = {t: 1.0}
    heap: list[tuple[float, int]] = [(-1.0, t)]
    pushes = 0
    touched = 0
    start = time.perf_counter()
    while heap:
        neg, v = heap[0]
        if -neg != r.get(v, 0.0):
            heapq.heappop(heap)
            continue
        current = -neg
        if not current > r_max_floor:
            break
        predicted = walk_cost * c * current / delta
        if wall_clock:
            if time.perf_counter() - start > predicted:
                break
        elif (pushes + 1) * push_cost > predicted:
            break
        if pushes >= max_pushes:
            raise PushBudgetExceeded(t, max_pushes)
        heapq.heappop(heap)
        r[v] = 0.0
        p[v] = p.get(v, 0.0) + alpha * current
        scale = keep * current
        us, ws = in_lists[v]
        for u, w in zip(us, ws):
            x = r.get(u, 0.0) + scale * w
            r[u] = x
            heapq.heappush(heap, (-x, u))
        pushes += 1
        touched += len(us)
        if callback is not None:
            callback(v, p, r)
    return _finish(t, p, r, pushes, touched, None)
