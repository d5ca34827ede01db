import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from dynchamfer.core import InstanceConfig
from dynchamfer.quadtree import A_SIDE, B_SIDE, DynQuadTree
from dynchamfer.sampler import sample_matched_point, sample_matched_points, sampling_law, total_gamma_weight
from dynchamfer.verify import reference_law, tv_distance


def key(*c):
    return np.array(c, dtype=np.int64).tobytes()


def two_a_tree():
    t = DynQuadTree(InstanceConfig(d=1, extent=8, shift_override=(0,)))
    for a in (1, 6):
        t.insert([a], A_SIDE)
    t.insert([5], B_SIDE)
    return t


def test_single_pair_always_returns_a():
    t = DynQuadTree(InstanceConfig(d=2, extent=16, seed=4))
    t.insert([2, 3], A_SIDE)
    t.insert([9, 9], B_SIDE)
    rng = random.Random(0)
    side = t.matched_node_of([2, 3])[1]
    for _ in range(20):
        s = sample_matched_point(t, rng)
        assert s.point.tolist() == [2, 3] and s.cell_side == side


def test_hand_example_law():
    t = two_a_tree()
    law = sampling_law(t)
    assert law == {key(1): (Fraction(8, 12), 8), key(6): (Fraction(4, 12), 4)}
    rng = random.Random(1)
    counts = Counter(int(sample_matched_point(t, rng).point[0]) for _ in range(100_000))
    assert tv_distance({k: v / 100_000 for k, v in counts.items()}, {1: 8 / 12, 6: 4 / 12}) < 0.02


def test_total_gamma_weight():
    assert total_gamma_weight(two_a_tree()) == 12
    empty = DynQuadTree(InstanceConfig(d=1, extent=8))
    assert total_gamma_weight(empty) == 0


def test_total_matches_bruteforce_map():
    rng = random.Random(8)
    t = DynQuadTree(InstanceConfig(d=2, extent=64, seed=8))
    for _ in range(150):
        t.insert([rng.randrange(64), rng.randrange(64)], rng.choice((A_SIDE, B_SIDE)))
    brute = t.recompute_gammas_bruteforce()
    assert total_gamma_weight(t) == sum(g * ((2 * 64) >> cell.level) for cell, (_, _, g) in brute.items())


def test_b_only_subtrees_are_never_chosen():
    # A points in a B-free sibling are reachable; the B point itself never is
    t = DynQuadTree(InstanceConfig(d=1, extent=16, shift_override=(0,)))
    t.insert([0], A_SIDE)
    t.insert([1], A_SIDE)
    t.insert([15], B_SIDE)
    pts = {int(sample_matched_point(t, random.Random(s)).point[0]) for s in range(200)}
    assert pts == {0, 1}


def test_law_matches_reference_on_random_instances():
    rng = random.Random(2)
    for _ in range(15):
        d = rng.choice((1, 2, 3))
        t = DynQuadTree(InstanceConfig(d=d, extent=256, seed=rng.randrange(1000)))
        A = [[rng.randrange(256) for _ in range(d)] for _ in range(rng.randint(1, 40))]
        B = [[rng.randrange(256) for _ in range(d)] for _ in range(rng.randint(1, 10))]
        A += A[:3]  # duplicates
        for b in B:
            t.insert(b, B_SIDE)
        for a in A:
            t.insert(a, A_SIDE)
        got = {k: p for k, (p, _) in sampling_law(t).items()}
        assert got == reference_law(A, B, t.shift, 256)


def test_batch_sampling_shapes():
    t = two_a_tree()
    pts, sides, total = sample_matched_points(t, random.Random(0), 50)
    assert pts.shape == (50, 1) and sides.shape == (50,) and total == 12
    assert set(zip(pts[:, 0].tolist(), sides.tolist())) <= {(1, 8.0), (6, 4.0)}


def test_empty_sets_rejected():
    t = DynQuadTree(InstanceConfig(d=1, extent=8))
    t.insert([1], A_SIDE)
    with pytest.raises(ValueError):
        sample_matched_point(t, random.Random(0))
    t2 = DynQuadTree(InstanceConfig(d=1, extent=8))
    t2.insert([1], B_SIDE)
    with pytest.raises(ValueError):
        sample_matched_point(t2, random.Random(0))
