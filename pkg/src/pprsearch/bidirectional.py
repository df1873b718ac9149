"""Bidirectional PPR estimation: reverse push from t plus forward walks from s."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph import Graph, as_source
from .reverse_push import (
    DEFAULT_MAX_PUSHES,
    ReverseVector,
    approx_contributions,
    approx_contributions_balanced,
)
from .walks import ForwardVector, forward_vector, make_rng

PRACTICAL_C = 7.0


def choose_c(epsilon: float, p_fail: float) -> float:
    """Walk constant ``(3/eps^2) ln(2/p_fail)`` giving relative error ``eps`` w.p. ``1 - p_fail``."""
    if not (0 < epsilon <= 1 and 0 < p_fail < 1):
        raise ValueError("need 0 < epsilon <= 1 and 0 < p_fail < 1")
    return 3.0 / epsilon**2 * math.log(2.0 / p_fail)


def default_r_max(g: Graph, epsilon: float, alpha: float, p_fail: float) -> float:
    """Residual threshold ``(eps/alpha) sqrt(d_avg / ln(2/p_fail))`` minimizing expected running time."""
    return epsilon / alpha * math.sqrt(g.avg_degree / math.log(2.0 / p_fail))


def balance_r_max(c_balance: float, m: int) -> float:
    """The simple ``c_balance / sqrt(m)`` threshold."""
    return c_balance / math.sqrt(m)


@dataclass(frozen=True)
class EstimatorParams:
    """Estimator configuration.

    ``c`` defaults to ``choose_c(epsilon, p_fail)``.  With ``balanced=True``
    the residual threshold is found dynamically (``r_max`` then acts as a
    floor) and ``walk_cost``/``push_cost`` drive the stopping rule.
    """

    alpha: float = 0.2
    delta: float = 1e-3
    epsilon: float = 0.5
    p_fail: float = 0.01
    c: float | None = None
    r_max: float = 0.1
    balanced: bool = False
    walk_cost: float = 1.0
    push_cost: float | None = None
    max_pushes: int = DEFAULT_MAX_PUSHES

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not (0 < self.epsilon <= 1 and 0 < self.p_fail < 1):
            raise ValueError("need 0 < epsilon <= 1 and 0 < p_fail < 1")
        if self.c is None:
            object.__setattr__(self, "c", choose_c(self.epsilon, self.p_fail))
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not (self.r_max > 0 or (self.balanced and self.r_max >= 0)):
            raise ValueError("r_max must be positive")

    @property
    def w(self) -> int:
        return self.walks_for(self.r_max)

    def walks_for(self, r_max: float) -> int:
        return max(1, math.ceil(self.c * r_max / self.delta))

    @property
    def guarantee_threshold(self) -> float:
        return 2 * math.e * self.delta / (self.alpha * self.epsilon)

    def within_guarantee(self, r_max: float | None = None) -> bool:
        """Whether the accuracy guarantee's precondition ``r_max > 2e delta/(alpha eps)`` holds."""
        return (self.r_max if r_max is None else r_max) > self.guarantee_threshold


@dataclass(frozen=True)
class PprEstimate:
    value: float
    p_term: float
    walk_term: float
    w: int
    r_max_achieved: float
    within_guarantee: bool = True
    forward: ForwardVector | None = field(default=None, repr=False, compare=False)
    reverse: ReverseVector | None = field(default=None, repr=False, compare=False)


def dot_terms(x: ForwardVector, y: ReverseVector) -> tuple[float, float]:
    """``(p_term, walk_term)`` of ``<x_s, y^t>``, each summed in ascending coordinate order."""
    p_term = 0.0
    for v, sv in x.p_block():
        pv = y.p.get(v)
        if pv is not None:
            p_term += sv * pv
    walk_term = 0.0
    r = y.r
    for v, xv in x.r_block():
        rv = r.get(v)
        if rv is not None:
            walk_term += xv * rv
    return p_term, walk_term


def estimate_from_vectors(x: ForwardVector, y: ReverseVector) -> float:
    """The dot product ``<x_s, y^t>`` (p-block plus walk term)."""
    if x.n <= max(max(y.p, default=-1), max(y.r, default=-1), y.target):
        raise ValueError("forward and reverse vectors come from graphs of different size")
    p_term, walk_term = dot_terms(x, y)
    return p_term + walk_term


def reverse_for(g: Graph, t: int, params: EstimatorParams) -> ReverseVector:
    if params.balanced:
        return approx_contributions_balanced(
            g, params.alpha, t, params.delta, params.c, params.walk_cost,
            push_cost=params.push_cost, r_max_floor=params.r_max,
            max_pushes=params.max_pushes,
        )
    return approx_contributions(g, params.alpha, t, params.r_max, max_pushes=params.max_pushes)


def bidirectional_ppr(g: Graph, source, t: int, params: EstimatorParams, rng) -> PprEstimate:
    """Estimate ``pi_source(t)`` as ``p^t(s) + mean of r^t(walk endpoint)``.

    For a source distribution each walk draws its own start and the
    p-term is the exact expectation ``sum_s sigma(s) p^t(s)``.
    """
    source = as_source(source)
    source.validate_for(g)
    rng = make_rng(rng)
    y = reverse_for(g, t, params)
    r_bound = y.r_max_achieved if params.balanced else params.r_max
    w = params.walks_for(r_bound)
    x = forward_vector(g, params.alpha, source, w, rng)
    p_term, walk_term = dot_terms(x, y)
    return PprEstimate(
        p_term + walk_term,
        p_term,
        walk_term,
        w,
        y.r_max_achieved,
        params.within_guarantee(r_bound),
        x,
        y,
    )
