"""Points, the l1 metric, grid quantization and the exact Chamfer oracle.

Points are 1-D ``numpy.int64`` arrays of grid coordinates.  Anything that
accepts a point also accepts a plain sequence of ints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

DEFAULT_EXTENT = 2**20


def as_point(x, d: Optional[int] = None) -> np.ndarray:
    """Coerce ``x`` to a 1-D int64 coordinate vector, optionally checking its dimension."""
    p = np.asarray(x)
    if p.ndim != 1:
        raise ValueError(f"a point must be a 1-D vector, got shape {p.shape}")
    if p.dtype.kind not in "iu":
        if p.dtype.kind == "f" and np.all(p == np.round(p)):
            p = p.astype(np.int64)
        else:
            raise TypeError(f"point coordinates must be integers, got dtype {p.dtype}")
    p = p.astype(np.int64, copy=False)
    if d is not None and p.shape[0] != d:
        raise ValueError(f"dimension mismatch: expected {d}, got {p.shape[0]}")
    return p


def as_points(X, d: Optional[int] = None) -> np.ndarray:
    """Coerce a collection of points to an ``(n, d)`` int64 array."""
    arr = np.asarray(X)
    if arr.size == 0:
        return np.zeros((0, d or 0), dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array of points, got shape {arr.shape}")
    if arr.dtype.kind == "f":
        if not np.all(arr == np.round(arr)):
            raise TypeError("point coordinates must be integers")
    elif arr.dtype.kind not in "iu":
        raise TypeError(f"point coordinates must be integers, got dtype {arr.dtype}")
    arr = arr.astype(np.int64, copy=False)
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"dimension mismatch: expected {d}, got {arr.shape[1]}")
    return arr


def l1_dist(p, q) -> int:
    p = as_point(p)
    q = as_point(q, p.shape[0])
    return int(np.abs(p - q).sum())


def l1_block(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """All pairwise l1 distances as int64; exact while sums stay below 2**53."""
    return cdist(A, B, metric="cityblock").astype(np.int64)


def nearest_l1(A: np.ndarray, B: np.ndarray, chunk_elems: int = 1 << 22) -> np.ndarray:
    """Brute-force ``min_b ||a - b||_1`` for every row of ``A``.

    Work is chunked over ``A`` so the ``(rows, |B|)`` distance block stays
    below ``chunk_elems`` entries.
    """
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if B.shape[0] == 0:
        raise ValueError("nearest neighbour against an empty set")
    out = np.empty(A.shape[0], dtype=np.int64)
    rows = max(1, chunk_elems // B.shape[0])
    for start in range(0, A.shape[0], rows):
        out[start:start + rows] = l1_block(A[start:start + rows], B).min(axis=1)
    return out


def chamfer_exact(A, B) -> int:
    """Exact ``sum_a min_b ||a - b||_1`` by brute force over all pairs."""
    B = as_points(B)
    if B.shape[0] == 0:
        raise ValueError("Chamfer distance is undefined for an empty B")
    A = as_points(A, B.shape[1])
    if A.shape[0] == 0:
        return 0
    return int(nearest_l1(A, B).sum())


@dataclass(frozen=True)
class InstanceConfig:
    """Geometry of one dynamic instance.

    ``extent`` is the side ``U`` of the input universe ``[0, U)^d``; it must be
    a power of two.  The quad-tree then has ``levels = log2(2U)`` subdivision
    levels below the root, so the finest grid has unit cells.
    """

    d: int
    extent: int = DEFAULT_EXTENT
    seed: int = 0
    shift_override: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.extent < 1 or self.extent & (self.extent - 1):
            raise ValueError(f"extent must be a power of two, got {self.extent}")
        if self.shift_override is not None:
            s = np.asarray(self.shift_override)
            if s.shape != (self.d,):
                raise ValueError("shift_override must have one entry per dimension")
            if np.any(s < 0) or np.any(s >= self.extent):
                raise ValueError("shift_override entries must lie in [0, extent)")

    @property
    def levels(self) -> int:
        return (2 * self.extent).bit_length() - 1


@dataclass(frozen=True)
class EstimatorParams:
    eps: float = 0.2
    alpha: float = 0.0
    m: Optional[int] = None
    boost_reps: int = 1

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        if self.boost_reps < 1 or self.boost_reps % 2 == 0:
            raise ValueError("boost_reps must be odd and >= 1")


class GridQuantizer(TransformerMixin, BaseEstimator):
    """Affine map from real vectors onto the integer grid ``[0, extent)^d``.

    The minimum corner of the fitted data goes to the origin and one uniform
    scale factor maps the largest per-dimension extent onto ``extent - 1``.
    Coordinates round half up, so the map is monotone in every dimension.

    Parameters
    ----------
    extent : int
        Grid side ``U`` (power of two).

    Attributes
    ----------
    min_ : ndarray of shape (d,)
    scale_ : float
    n_features_in_ : int
    """

    def __init__(self, extent: int = DEFAULT_EXTENT):
        self.extent = extent

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.extent < 1 or self.extent & (self.extent - 1):
            raise ValueError(f"extent must be a power of two, got {self.extent}")
        self.min_ = X.min(axis=0)
        span = float((X.max(axis=0) - self.min_).max())
        self.scale_ = (self.extent - 1) / span if span > 0 else 0.0
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"dimension mismatch: fitted on {self.n_features_in_}, got {X.shape[1]}")
        out = np.floor((X - self.min_) * self.scale_ + 0.5).astype(np.int64)
        if out.size and (out.min() < 0 or out.max() >= self.extent):
            raise ValueError("points fall outside the fitted grid; refit on the full dataset")
        return out


def quantize_dataset(raw, cfg: InstanceConfig) -> np.ndarray:
    """Fit a :class:`GridQuantizer` to ``raw`` and return its grid points."""
    X = np.asarray(raw, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty 2-D collection of vectors")
    if X.shape[1] != cfg.d:
        raise ValueError(f"dimension mismatch: config says {cfg.d}, data has {X.shape[1]}")
    return GridQuantizer(cfg.extent).fit_transform(X)


def log2n(n: int) -> float:
    return math.log2(max(n, 2))
