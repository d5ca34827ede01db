import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dynchamfer import DynamicChamferEstimator, chamfer_exact


def clouds(seed=0):
    rng = np.random.default_rng(seed)
    return rng.random((300, 3)), rng.random((200, 3))


def test_params_and_clone():
    est = DynamicChamferEstimator(eps=0.3, n_samples=50, random_state=4)
    assert est.get_params()["n_samples"] == 50
    c = clone(est)
    assert c.eps == 0.3 and c.random_state == 4


def test_fit_and_estimate_close_to_exact():
    A, B = clouds()
    est = DynamicChamferEstimator(n_samples=2000, boost_reps=3, random_state=1).fit(A, B)
    exact = est.exact()
    assert exact == chamfer_exact(est.quantizer_.transform(A), est.quantizer_.transform(B))
    assert abs(est.estimate() * 1.1 - exact) <= 0.2 * exact
    in_units = est.estimate_original_units()
    assert abs(in_units * 1.1 - exact / est.quantizer_.scale_) <= 0.2 * exact / est.quantizer_.scale_


def test_updates_go_through_the_quantizer():
    A, B = clouds(1)
    est = DynamicChamferEstimator(n_samples=100).fit(A, B[:100], bounds=B)
    est.insert(B[100:150])
    est.delete(B[:50])
    expect = chamfer_exact(est.quantizer_.transform(A), est.quantizer_.transform(B[50:150]))
    assert est.exact() == expect
    est.insert(A[:1], side="A")
    assert est.model_.size_a == 301


def test_bounds_reserve_room_for_later_points():
    A, B = clouds(2)
    est = DynamicChamferEstimator(n_samples=10).fit(A, B, bounds=[[-1, -1, -1], [2, 2, 2]])
    est.insert([[1.5, 1.5, 1.5]])
    plain = DynamicChamferEstimator(n_samples=10).fit(A, B)
    with pytest.raises(ValueError):
        plain.insert([[1.5, 1.5, 1.5]])


def test_validation():
    with pytest.raises(NotFittedError):
        DynamicChamferEstimator().estimate()
    with pytest.raises(ValueError):
        DynamicChamferEstimator().fit(np.zeros((3, 2)), np.zeros((3, 3)))
