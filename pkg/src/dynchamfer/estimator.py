"""Dynamic Chamfer distance estimation by quad-tree importance sampling."""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import EstimatorParams, InstanceConfig, as_point, chamfer_exact, log2n
from .nn_oracle import NNOracle, make_oracle
from .quadtree import A_SIDE, B_SIDE, DynQuadTree
from .sampler import sample_matched_points

INSERT = "insert"
DELETE = "delete"


class UpdateEvent(NamedTuple):
    side: str
    op: str
    point: np.ndarray


@dataclass
class ChamferEstimate:
    value: float
    m_used: int
    raw_mean: float
    per_sample_weights: Optional[np.ndarray] = field(default=None, repr=False)


def default_sample_count(params: EstimatorParams, n: int, levels: int) -> int:
    """``ceil(120 * levels * log2(n) * max(alpha^2, 1) / eps^2)``."""
    return math.ceil(120 * levels * log2n(n) * max(params.alpha**2, 1.0) / params.eps**2)


class DynamicChamfer:
    """Maintains an importance sampler for ``dist_CH(A, B)`` under point updates.

    Parameters
    ----------
    cfg : InstanceConfig
        Grid geometry and seed.  The seed drives both the quad-tree shift and
        the query-time sampling.
    params : EstimatorParams
    oracle : NNOracle or str, default "auto"
        Nearest-neighbour oracle over B, or a kind accepted by
        :func:`~dynchamfer.nn_oracle.make_oracle`.
    """

    def __init__(self, cfg: InstanceConfig, params: EstimatorParams = EstimatorParams(),
                 oracle="auto"):
        self.cfg = cfg
        self.params = params
        self.rng = random.Random(cfg.seed)
        self.tree = DynQuadTree(cfg, self.rng)
        self.oracle: NNOracle = make_oracle(cfg.d, oracle) if isinstance(oracle, str) else oracle

    @property
    def size_a(self):
        return self.tree.size_a

    @property
    def size_b(self):
        return self.tree.size_b

    def insert(self, point, side: str):
        self.apply_update(UpdateEvent(side, INSERT, point))

    def delete(self, point, side: str):
        self.apply_update(UpdateEvent(side, DELETE, point))

    def apply_update(self, ev: UpdateEvent):
        side, op = ev.side, ev.op
        if side not in (A_SIDE, B_SIDE):
            raise ValueError(f"side must be 'A' or 'B', got {side!r}")
        p = as_point(ev.point, self.cfg.d)
        if op == INSERT:
            self.tree.insert(p, side)
            if side == B_SIDE:
                self.oracle.insert(p)
        elif op == DELETE:
            # tree validates membership before touching anything
            self.tree.delete(p, side)
            if side == B_SIDE:
                self.oracle.delete(p)
        else:
            raise ValueError(f"op must be 'insert' or 'delete', got {op!r}")

    def sample_count(self, params: Optional[EstimatorParams] = None) -> int:
        params = params or self.params
        if params.m is not None:
            return params.m
        return default_sample_count(params, self.tree.n, self.tree.levels)

    def query(self, params: Optional[EstimatorParams] = None, keep_weights: bool = False) -> ChamferEstimate:
        """One importance-sampling estimate of ``dist_CH(A, B)``."""
        params = params or self.params
        m = self.sample_count(params)
        pts, sides, total = sample_matched_points(self.tree, self.rng, m)
        nn = self.oracle.values(pts).astype(np.float64)
        x = nn * (total / sides)
        raw = float(x.mean())
        return ChamferEstimate(raw / (1 + params.eps / 2), m, raw, x if keep_weights else None)

    def query_boosted(self, params: Optional[EstimatorParams] = None) -> ChamferEstimate:
        """Median of ``boost_reps`` independent :meth:`query` results."""
        params = params or self.params
        if params.boost_reps == 1:
            return self.query(params)
        runs = [self.query(params) for _ in range(params.boost_reps)]
        mid = statistics.median_low([r.value for r in runs])
        best = next(r for r in runs if r.value == mid)
        return ChamferEstimate(best.value, sum(r.m_used for r in runs), best.raw_mean)

    def exact(self) -> int:
        """Exact Chamfer distance of the current sets (brute force)."""
        return chamfer_exact(self.tree.points(A_SIDE), self.tree.points(B_SIDE))
