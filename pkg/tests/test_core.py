import numpy as np
import pytest
from sklearn.base import clone

from dynchamfer.core import (
    EstimatorParams,
    GridQuantizer,
    InstanceConfig,
    as_point,
    chamfer_exact,
    l1_dist,
    nearest_l1,
    quantize_dataset,
)


def test_quantize_endpoints():
    out = quantize_dataset([(0.0, 0.0), (1.0, 1.0)], InstanceConfig(d=2, extent=8))
    assert out.tolist() == [[0, 0], [7, 7]]


def test_quantize_single_point_goes_to_origin():
    out = quantize_dataset([(5.0, 5.0)], InstanceConfig(d=2, extent=8))
    assert out.tolist() == [[0, 0]]


def test_quantize_hand_evaluated_map():
    # scale 7 / 1: (0.5, 0.25) -> (3.5, 1.75) -> rounds to (4, 2)
    out = quantize_dataset([(0, 0), (0.5, 0.25), (1, 1)], InstanceConfig(d=2, extent=8))
    assert out.tolist() == [[0, 0], [4, 2], [7, 7]]


def test_quantize_uses_one_scale_for_all_dims():
    q = GridQuantizer(16).fit([[0.0, 0.0], [3.0, 1.0]])
    assert q.scale_ == pytest.approx(5.0)
    assert q.transform([[3.0, 1.0]]).tolist() == [[15, 5]]


def test_quantize_dimension_mismatch():
    with pytest.raises(ValueError):
        quantize_dataset([(0.0, 1.0, 2.0)], InstanceConfig(d=2, extent=8))
    q = GridQuantizer(8).fit([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        q.transform([[0.0, 0.0, 0.0]])


def test_quantizer_rejects_points_outside_fit():
    q = GridQuantizer(8).fit([[0.0], [1.0]])
    with pytest.raises(ValueError, match="outside"):
        q.transform([[2.0]])


def test_quantizer_is_sklearn_compatible():
    q = GridQuantizer(extent=32)
    assert q.get_params() == {"extent": 32}
    assert clone(q).extent == 32
    with pytest.raises(ValueError):
        GridQuantizer(extent=12).fit([[0.0]])


@pytest.mark.parametrize("p,q,expected", [
    ((0, 0), (3, 4), 7),
    ((2, 9), (2, 9), 0),
    ((1, 2, 3), (4, 0, 3), 5),
])
def test_l1_dist(p, q, expected):
    assert l1_dist(p, q) == expected


def test_l1_dist_dimension_mismatch():
    with pytest.raises(ValueError):
        l1_dist((1, 2), (1, 2, 3))


def test_chamfer_small_cases():
    assert chamfer_exact([(0, 0), (2, 2)], [(0, 1)]) == 4
    assert chamfer_exact([(0, 0), (5, 0), (9, 9)], [(1, 0), (8, 8)]) == 7
    S = [(3, 1), (4, 4), (0, 7)]
    assert chamfer_exact(S, S) == 0


def test_chamfer_empty_b_rejected():
    with pytest.raises(ValueError):
        chamfer_exact([(0, 0)], np.zeros((0, 2), dtype=np.int64))


def test_chamfer_is_asymmetric():
    A, B = [(0,), (10,)], [(0,)]
    assert chamfer_exact(A, B) == 10
    assert chamfer_exact(B, A) == 0


def test_nearest_l1_matches_broadcast_reference():
    rng = np.random.default_rng(0)
    A = rng.integers(0, 2**21, size=(300, 17))
    B = rng.integers(0, 2**21, size=(41, 17))
    ref = np.abs(A[:, None, :] - B[None, :, :]).sum(axis=2).min(axis=1)
    assert np.array_equal(nearest_l1(A, B), ref)
    assert np.array_equal(nearest_l1(A, B, chunk_elems=50), ref)


def test_as_point_validation():
    assert as_point([1.0, 2.0]).tolist() == [1, 2]
    with pytest.raises(TypeError):
        as_point([1.5, 2.0])
    with pytest.raises(ValueError):
        as_point([[1, 2]])


def test_instance_config_invariants():
    cfg = InstanceConfig(d=3, extent=2**20)
    assert cfg.levels == 21
    with pytest.raises(ValueError):
        InstanceConfig(d=1, extent=6)
    with pytest.raises(ValueError):
        InstanceConfig(d=0, extent=8)
    with pytest.raises(ValueError):
        InstanceConfig(d=2, extent=8, shift_override=(0, 8))


@pytest.mark.parametrize("kw", [dict(eps=0.0), dict(eps=1.0), dict(m=0), dict(boost_reps=2), dict(alpha=-1)])
def test_estimator_params_invariants(kw):
    with pytest.raises(ValueError):
        EstimatorParams(**kw)
