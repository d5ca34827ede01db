"""Two-stage importance sampler over the points of A.

Stage one draws a node ``v`` with probability proportional to
``side(v) * gamma(v)``.  Stage two walks down from ``v`` through child
samplers (children without B points, weighted by their A count) until it
reaches a leaf, and returns that leaf's point.  A point ``a`` comes out with
probability ``side(v_a) / sum_v gamma(v) * side(v)`` where ``v_a`` is the
cell it is matched at.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quadtree import DynQuadTree


@dataclass(frozen=True)
class MatchedSample:
    point: np.ndarray
    cell_side: int
    total_weight: int


def total_gamma_weight(tree: DynQuadTree) -> int:
    return tree.tree_sampler.total_weight()


def _require_nonempty(tree):
    if tree.size_a == 0:
        raise ValueError("A is empty")
    if tree.size_b == 0:
        raise ValueError("B is empty")


def sample_matched_point(tree: DynQuadTree, rng) -> MatchedSample:
    """Draw one point of A with probability proportional to its matched cell side."""
    _require_nonempty(tree)
    nodes = tree.nodes
    v = nodes[tree.tree_sampler.sample(rng)]
    node = v
    while node.children:
        node = nodes[node.child_sampler.sample(rng)]
    return MatchedSample(node.leaf_point, v.side, tree.tree_sampler.total_weight())


def sample_matched_points(tree: DynQuadTree, rng, m: int):
    """``m`` independent draws as ``(points (m, d), cell_sides (m,), total_weight)``."""
    _require_nonempty(tree)
    nodes = tree.nodes
    ts = tree.tree_sampler
    pts = []
    sides = np.empty(m, dtype=np.float64)
    for i in range(m):
        v = nodes[ts.sample(rng)]
        node = v
        while node.children:
            node = nodes[node.child_sampler.sample(rng)]
        pts.append(node.leaf_point)
        sides[i] = v.side
    return np.stack(pts), sides, ts.total_weight()


def sampling_law(tree: DynQuadTree):
    """Exact distribution of :func:`sample_matched_point`, enumerated from the samplers.

    Returns ``{point_bytes: (probability, cell_side)}`` with probabilities as
    :class:`fractions.Fraction`.  Walks every branch the sampler could take
    using the samplers' own stored weights, so it describes what the
    structure actually does rather than what it should do.
    """
    ts = tree.tree_sampler
    total = ts.total_weight()
    law = defaultdict(lambda: [Fraction(0), None])
    if not total:
        return {}
    for key, w in ts.items():
        v = tree.nodes[key]
        stack = [(v, Fraction(w, total))]
        while stack:
            node, pr = stack.pop()
            if not node.children:
                entry = law[node.leaf_point.tobytes()]
                entry[0] += pr
                if entry[1] is not None and entry[1] != v.side:
                    raise AssertionError("point reachable from two different matched cells")
                entry[1] = v.side
                continue
            cs = node.child_sampler
            ctot = cs.total_weight()
            for ckey, cw in cs.items():
                if cw:
                    stack.append((tree.nodes[ckey], pr * Fraction(cw, ctot)))
    return {k: (p, side) for k, (p, side) in law.items()}
