import math
import random

import numpy as np
import pytest

from dynchamfer.core import EstimatorParams, InstanceConfig
from dynchamfer.estimator import DELETE, INSERT, DynamicChamfer, UpdateEvent, default_sample_count
from dynchamfer.quadtree import A_SIDE, B_SIDE
from dynchamfer.verify import expectation_gap, random_trace


def make(d=2, extent=64, seed=0, **kw):
    return DynamicChamfer(InstanceConfig(d=d, extent=extent, seed=seed), EstimatorParams(**kw))


def state(est):
    return (est.tree.gamma_map(), est.tree.total_gamma_weight(), len(est.oracle),
            sorted(map(tuple, est.tree.points(B_SIDE).tolist())))


def test_round_trip_is_identity():
    est = make(seed=3)
    rng = random.Random(3)
    for _ in range(60):
        est.insert([rng.randrange(64), rng.randrange(64)], rng.choice((A_SIDE, B_SIDE)))
    before = state(est)
    for side in (A_SIDE, B_SIDE):
        est.insert([7, 7], side)
        est.delete([7, 7], side)
        assert state(est) == before


def test_b_on_top_of_a_drives_match_to_bottom():
    est = make(d=2, extent=256, seed=1)
    est.insert([10, 20], A_SIDE)
    est.insert([200, 3], B_SIDE)
    est.insert([10, 20], B_SIDE)
    assert est.tree.matched_node_of([10, 20])[0].level == est.tree.levels


def test_replay_is_deterministic_per_seed():
    def run(seed):
        est = make(d=2, extent=128, seed=seed, m=40)
        rng = random.Random(99)
        out = []
        for i, (op, side, p) in enumerate(random_trace(rng, 2, 128, 1000, 150)):
            est.apply_update(UpdateEvent(side, op, p))
            if i % 100 == 99 and est.size_a and est.size_b:
                out.append(est.query().raw_mean)
        return out
    assert run(4) == run(4)
    assert run(4) != run(5)


def test_single_a_point_is_exact():
    est = make(d=3, extent=1024, seed=2, m=10)
    est.insert([1, 2, 3], A_SIDE)
    for b in ([100, 200, 300], [5, 5, 5], [900, 1, 1]):
        est.insert(b, B_SIDE)
    r = est.query()
    assert r.raw_mean == est.exact() == 9


def test_hand_example_expectation():
    est = DynamicChamfer(InstanceConfig(d=1, extent=8, shift_override=(0,)), oracle="scan")
    est.insert([1], A_SIDE)
    est.insert([6], A_SIDE)
    est.insert([5], B_SIDE)
    assert est.exact() == 5
    assert expectation_gap(est.tree) == 0.0
    r = est.query(EstimatorParams(m=1000), keep_weights=True)
    # x_a is 4 * 12/8 = 6 for a=1 and 1 * 12/4 = 3 for a=6
    assert set(r.per_sample_weights.tolist()) <= {6.0, 3.0}


def test_value_is_shifted_raw_mean():
    est = make(seed=1, eps=0.4, m=30)
    rng = random.Random(1)
    for _ in range(30):
        est.insert([rng.randrange(64), rng.randrange(64)], rng.choice((A_SIDE, B_SIDE)))
    est.insert([0, 0], A_SIDE)
    est.insert([1, 0], B_SIDE)
    r = est.query()
    assert r.value == pytest.approx(r.raw_mean / 1.2)
    assert r.m_used == 30 and r.per_sample_weights is None


def test_boost_one_equals_query():
    def build():
        est = make(seed=6, m=25)
        rng = random.Random(6)
        for _ in range(40):
            est.insert([rng.randrange(64), rng.randrange(64)], rng.choice((A_SIDE, B_SIDE)))
        est.insert([3, 3], A_SIDE)
        est.insert([4, 3], B_SIDE)
        return est
    assert build().query_boosted().raw_mean == build().query().raw_mean


def test_boosted_median_is_within_band_when_most_runs_are():
    est = make(d=2, extent=2**12, seed=9, m=400, boost_reps=5)
    rng = np.random.default_rng(9)
    for p in rng.integers(0, 2**12, size=(200, 2)):
        est.insert(p, A_SIDE)
    for p in rng.integers(0, 2**12, size=(200, 2)):
        est.insert(p, B_SIDE)
    exact = est.exact()
    r = est.query_boosted()
    assert abs(r.raw_mean - exact) <= 0.2 * exact
    assert r.m_used == 5 * 400


def test_default_sample_count():
    p = EstimatorParams(eps=0.5, alpha=1.0)
    assert default_sample_count(p, 1024, 21) == 100800
    p2 = EstimatorParams(eps=0.5, alpha=2.0)
    assert default_sample_count(p2, 1024, 21) == 4 * 100800
    est = make(extent=2**20, eps=0.5)
    est.insert([0, 0], A_SIDE)
    assert est.sample_count() == math.ceil(120 * 21 * 1 / 0.25)


def test_update_errors_leave_state_alone():
    est = make(seed=2)
    est.insert([1, 1], B_SIDE)
    est.insert([2, 2], A_SIDE)
    before = state(est)
    with pytest.raises(KeyError):
        est.delete([9, 9], B_SIDE)
    with pytest.raises(ValueError):
        est.apply_update(UpdateEvent("C", INSERT, [1, 1]))
    with pytest.raises(ValueError):
        est.apply_update(UpdateEvent(A_SIDE, "move", [1, 1]))
    with pytest.raises(ValueError):
        est.insert([1, 2, 3], A_SIDE)
    assert state(est) == before
    est.apply_update(UpdateEvent(B_SIDE, DELETE, [1, 1]))
    assert len(est.oracle) == 0


def test_query_needs_both_sets():
    est = make()
    est.insert([1, 1], A_SIDE)
    with pytest.raises(ValueError):
        est.query()
