"""scikit-learn style front end for :class:`~dynchamfer.estimator.DynamicChamfer`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import DEFAULT_EXTENT, EstimatorParams, GridQuantizer, InstanceConfig
from .estimator import DynamicChamfer
from .quadtree import A_SIDE, B_SIDE


class DynamicChamferEstimator(BaseEstimator):
    """Chamfer distance from A to B over real-valued vectors, kept up to date under updates.

    ``fit(A, B)`` fits a shared :class:`~dynchamfer.core.GridQuantizer` on
    ``A`` and ``B`` together and loads both sets.  Afterwards points can be
    added and removed with :meth:`insert` / :meth:`delete`; later points must
    fall inside the fitted bounding box (pass ``bounds`` to ``fit`` to reserve
    room for them).

    Parameters
    ----------
    eps : float, default 0.2
    alpha : float, default 0
    n_samples : int or None
        Samples per query; ``None`` uses the worst-case default.
    boost_reps : int, default 1
    extent : int, default 2**20
    oracle : str, default "auto"
    random_state : int, default 0

    Attributes
    ----------
    quantizer_ : GridQuantizer
    model_ : DynamicChamfer
    """

    def __init__(self, eps=0.2, alpha=0.0, n_samples=None, boost_reps=1, extent=DEFAULT_EXTENT,
                 oracle="auto", random_state=0):
        self.eps = eps
        self.alpha = alpha
        self.n_samples = n_samples
        self.boost_reps = boost_reps
        self.extent = extent
        self.oracle = oracle
        self.random_state = random_state

    def fit(self, A, B, bounds=None):
        A = check_array(A, dtype=np.float64)
        B = check_array(B, dtype=np.float64)
        if A.shape[1] != B.shape[1]:
            raise ValueError(f"A has {A.shape[1]} features, B has {B.shape[1]}")
        ref = np.vstack([A, B] + ([check_array(bounds, dtype=np.float64)] if bounds is not None else []))
        self.quantizer_ = GridQuantizer(self.extent).fit(ref)
        self.n_features_in_ = A.shape[1]
        params = EstimatorParams(self.eps, self.alpha, self.n_samples, self.boost_reps)
        cfg = InstanceConfig(d=A.shape[1], extent=self.extent, seed=self.random_state)
        self.model_ = DynamicChamfer(cfg, params, self.oracle)
        self._update(B, B_SIDE, "insert")
        self._update(A, A_SIDE, "insert")
        return self

    def _update(self, X, side, op):
        check_is_fitted(self, "model_")
        X = self.quantizer_.transform(np.atleast_2d(X))
        for p in X:
            getattr(self.model_, op)(p, side)
        return self

    def insert(self, X, side="B"):
        """Add the rows of ``X`` to set ``side`` ('A' or 'B')."""
        return self._update(X, side, "insert")

    def delete(self, X, side="B"):
        """Remove the rows of ``X`` from set ``side``; each row must be present."""
        return self._update(X, side, "delete")

    def estimate(self) -> float:
        """Current estimate, in grid units of the fitted quantizer."""
        check_is_fitted(self, "model_")
        return self.model_.query_boosted().value

    def estimate_original_units(self) -> float:
        """:meth:`estimate` mapped back to the input scale (l1 distances scale linearly)."""
        s = self.quantizer_.scale_
        return self.estimate() / s if s else 0.0

    def exact(self) -> int:
        check_is_fitted(self, "model_")
        return self.model_.exact()
