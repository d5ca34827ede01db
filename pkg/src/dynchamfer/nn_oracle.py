"""Dynamic nearest-neighbour oracles under l1, and a Gaussian l2 -> l1 embedding.

An oracle holds a dynamic multiset ``B`` and answers ``value(a)`` with a
number ``mu`` such that ``mu <= min_b ||a - b||_1 <= (1 + alpha) * mu``.
Both oracles here are exact (``alpha = 0``).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .core import as_point, as_points, nearest_l1

KDTREE_MAX_DIM = 16


class PointStore:
    """Growable ``(n, d)`` int64 array with O(1) append and swap-remove by value."""

    def __init__(self, d: int, capacity: int = 16):
        self.d = d
        self._data = np.empty((capacity, d), dtype=np.int64)
        self._n = 0
        self._where: dict[bytes, list] = {}

    def __len__(self):
        return self._n

    @property
    def array(self) -> np.ndarray:
        return self._data[: self._n]

    def __contains__(self, p):
        return bool(self._where.get(as_point(p).tobytes()))

    def add(self, p):
        p = as_point(p, self.d)
        if self._n == self._data.shape[0]:
            grown = np.empty((2 * self._n, self.d), dtype=np.int64)
            grown[: self._n] = self._data[: self._n]
            self._data = grown
        i = self._n
        self._data[i] = p
        self._where.setdefault(p.tobytes(), []).append(i)
        self._n += 1
        return i

    def remove(self, p):
        p = as_point(p, self.d)
        key = p.tobytes()
        slots = self._where.get(key)
        if not slots:
            raise KeyError(f"point {p.tolist()} not present")
        i = slots.pop()
        if not slots:
            del self._where[key]
        last = self._n - 1
        if i != last:
            moved = self._data[last]
            mkey = moved.tobytes()
            mslots = self._where[mkey]
            mslots[mslots.index(last)] = i
            self._data[i] = moved
        self._n = last
        return i

    def get(self, i):
        return self._data[i]


class NNOracle:
    """Interface for dynamic l1 nearest-neighbour oracles."""

    alpha = 0.0

    def insert(self, b):
        raise NotImplementedError

    def delete(self, b):
        raise NotImplementedError

    def values(self, A) -> np.ndarray:
        """Nearest-neighbour values for each row of ``A``."""
        raise NotImplementedError

    def value(self, a) -> int:
        return int(self.values(as_point(a)[None, :])[0])

    def __len__(self):
        raise NotImplementedError


class ScanOracle(NNOracle):
    """Exact oracle by linear scan; O(1) update, O(|B| d) query."""

    def __init__(self, d: int):
        self.d = d
        self._store = PointStore(d)

    def __len__(self):
        return len(self._store)

    def insert(self, b):
        self._store.add(b)

    def delete(self, b):
        self._store.remove(b)

    def values(self, A):
        if len(self._store) == 0:
            raise ValueError("nearest neighbour query against an empty B")
        return nearest_l1(as_points(A, self.d), self._store.array)


class KDTreeOracle(NNOracle):
    """Exact oracle over a static KD-tree plus small insert/delete buffers.

    Inserts go to a scanned buffer and deletes of tree points are masked out;
    once either buffer outgrows ``max(min_slack, 2 * sqrt(n))`` the tree is
    rebuilt from the live points.  Queries ask the tree for
    ``len(masked) + 1`` neighbours so at least one survives the mask.
    """

    def __init__(self, d: int, min_slack: int = 64):
        self.d = d
        self.min_slack = min_slack
        self._snap = np.zeros((0, d), dtype=np.int64)
        self._kd = None
        self._masked: set = set()
        self._buffer = PointStore(d)
        self.rebuilds = 0

    def __len__(self):
        return self._snap.shape[0] - len(self._masked) + len(self._buffer)

    def _slack(self):
        return max(self.min_slack, 2 * math.isqrt(max(len(self), 1)))

    def insert(self, b):
        self._buffer.add(b)
        if len(self._buffer) > self._slack():
            self._rebuild()

    def delete(self, b):
        p = as_point(b, self.d)
        if p in self._buffer:
            self._buffer.remove(p)
            return
        hits = self._kd.query_ball_point(p, r=0.5, p=1) if self._kd is not None else []
        free = [i for i in hits if i not in self._masked]
        if not free:
            raise KeyError(f"point {p.tolist()} not present")
        self._masked.add(free[0])
        if len(self._masked) > self._slack():
            self._rebuild()

    def _rebuild(self):
        keep = np.ones(self._snap.shape[0], dtype=bool)
        if self._masked:
            keep[list(self._masked)] = False
        snap = np.concatenate([self._snap[keep], self._buffer.array])
        self._snap = snap
        self._kd = cKDTree(snap) if snap.shape[0] else None
        self._masked = set()
        self._buffer = PointStore(self.d)
        self.rebuilds += 1

    def values(self, A):
        if len(self) == 0:
            raise ValueError("nearest neighbour query against an empty B")
        A = as_points(A, self.d)
        best = np.full(A.shape[0], np.iinfo(np.int64).max, dtype=np.int64)
        n_snap = self._snap.shape[0]
        if self._kd is not None and n_snap > len(self._masked):
            k = min(n_snap, len(self._masked) + 1)
            dist, idx = self._kd.query(A, k=k, p=1)
            if k == 1:
                best = np.rint(dist).astype(np.int64)
            else:
                if self._masked:
                    ok = ~np.isin(idx, np.fromiter(self._masked, dtype=np.int64))
                else:
                    ok = np.ones(idx.shape, dtype=bool)
                first = ok.argmax(axis=1)
                has = ok[np.arange(len(first)), first]
                picked = dist[np.arange(len(first)), first]
                best = np.where(has, np.rint(picked), best).astype(np.int64)
        if len(self._buffer):
            best = np.minimum(best, nearest_l1(A, self._buffer.array))
        return best


def make_oracle(d: int, kind: str = "auto") -> NNOracle:
    """``kind`` is one of ``auto``, ``scan``, ``kdtree``; ``auto`` picks the KD-tree for ``d <= 16``."""
    if kind == "auto":
        kind = "kdtree" if d <= KDTREE_MAX_DIM else "scan"
    if kind == "scan":
        return ScanOracle(d)
    if kind == "kdtree":
        return KDTreeOracle(d)
    if kind == "lsh":
        raise NotImplementedError("approximate LSH oracles are not provided; use 'scan' or 'kdtree'")
    raise ValueError(f"unknown oracle kind {kind!r}")


class L2ToL1Embedding(TransformerMixin, BaseEstimator):
    """Random Gaussian map whose l1 distances approximate input l2 distances.

    Each output coordinate is ``<g, x> / (k * sqrt(2 / pi))`` for an i.i.d.
    standard normal ``g``; since ``E|<g, x>| = ||x||_2 sqrt(2/pi)``, the l1
    norm of the image concentrates around ``||x||_2``.

    Parameters
    ----------
    eps : float
        Target distortion; the output dimension is ``ceil(c * d / eps**2)``.
    c : float, default 4
    random_state : int, RandomState or None
    """

    def __init__(self, eps: float = 0.25, c: float = 4.0, random_state=None):
        self.eps = eps
        self.c = c
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        d = X.shape[1]
        k = math.ceil(self.c * d / self.eps**2)
        rs = check_random_state(self.random_state)
        self.components_ = rs.standard_normal((k, d))
        self.scale_ = 1.0 / (k * math.sqrt(2.0 / math.pi))
        self.n_features_in_ = d
        self.n_components_ = k
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"dimension mismatch: fitted on {self.n_features_in_}, got {X.shape[1]}")
        return (X @ self.components_.T) * self.scale_


def embed_l2_to_l1(points, eps: float, seed: int = 0, c: float = 4.0) -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    return L2ToL1Embedding(eps=eps, c=c, random_state=seed).fit_transform(X)
