"""Comparison algorithms: exact maintenance ("benchmark") and uniform sampling."""

from __future__ import annotations

import random

import numpy as np
from scipy.spatial import cKDTree

from .core import as_point, l1_block
from .estimator import DELETE, INSERT, ChamferEstimate, UpdateEvent
from .nn_oracle import KDTREE_MAX_DIM, NNOracle, PointStore, make_oracle
from .quadtree import A_SIDE, B_SIDE

_NONE = -1


class BenchmarkChamfer:
    """Exact Chamfer distance kept up to date under updates.

    For every ``a`` the current nearest distance and the id of its minimiser
    are stored.  Inserting ``b`` scans all of A once; deleting ``b`` rescans
    B only for the points whose recorded minimiser was ``b``.
    ``distance_evals`` counts point-to-point distance evaluations.
    """

    def __init__(self, d: int):
        self.d = d
        self._A = PointStore(d)
        self._dist = np.zeros(16, dtype=np.int64)
        self._arg = np.full(16, _NONE, dtype=np.int64)
        self._B = PointStore(d)
        self._bid = np.zeros(16, dtype=np.int64)  # B slot -> stable id
        self._next_id = 0
        self.total = 0
        self.distance_evals = 0

    @property
    def size_a(self):
        return len(self._A)

    @property
    def size_b(self):
        return len(self._B)

    def insert(self, point, side: str):
        self.apply_update(UpdateEvent(side, INSERT, point))

    def delete(self, point, side: str):
        self.apply_update(UpdateEvent(side, DELETE, point))

    def apply_update(self, ev: UpdateEvent):
        p = as_point(ev.point, self.d)
        if ev.side == A_SIDE:
            self._insert_a(p) if ev.op == INSERT else self._delete_a(p)
        elif ev.side == B_SIDE:
            self._insert_b(p) if ev.op == INSERT else self._delete_b(p)
        else:
            raise ValueError(f"side must be 'A' or 'B', got {ev.side!r}")

    def _grow(self, arr, n, fill):
        if n < arr.shape[0]:
            return arr
        out = np.full(2 * arr.shape[0], fill, dtype=arr.dtype)
        out[: arr.shape[0]] = arr
        return out

    def _nearest(self, rows):
        """(distances, minimiser ids) of ``rows`` against the current B."""
        Bv = self._B.array
        self.distance_evals += rows.shape[0] * Bv.shape[0]
        diff = l1_block(rows, Bv)
        j = diff.argmin(axis=1)
        return diff[np.arange(rows.shape[0]), j], self._bid[j]

    def _insert_a(self, p):
        i = self._A.add(p)
        self._dist = self._grow(self._dist, i, 0)
        self._arg = self._grow(self._arg, i, _NONE)
        if len(self._B):
            dist, arg = self._nearest(p[None, :])
            self._dist[i], self._arg[i] = dist[0], arg[0]
            self.total += int(dist[0])
        else:
            self._dist[i], self._arg[i] = 0, _NONE

    def _delete_a(self, p):
        if p not in self._A:
            raise KeyError(f"point {p.tolist()} is not in A")
        last = len(self._A) - 1
        i = self._A.remove(p)
        if len(self._B):
            self.total -= int(self._dist[i])
        self._dist[i], self._arg[i] = self._dist[last], self._arg[last]

    def _insert_b(self, p):
        first = len(self._B) == 0
        j = self._B.add(p)
        self._bid = self._grow(self._bid, j, 0)
        bid = self._next_id
        self._next_id += 1
        self._bid[j] = bid
        n = len(self._A)
        if n == 0:
            return
        Av = self._A.array
        self.distance_evals += n
        dist = np.abs(Av - p).sum(axis=1)
        if first:
            self._dist[:n], self._arg[:n] = dist, bid
            self.total = int(dist.sum())
            return
        closer = dist < self._dist[:n]
        if closer.any():
            self.total -= int((self._dist[:n][closer] - dist[closer]).sum())
            self._dist[:n][closer] = dist[closer]
            self._arg[:n][closer] = bid

    def _delete_b(self, p):
        if p not in self._B:
            raise KeyError(f"point {p.tolist()} is not in B")
        last = len(self._B) - 1
        key = p.tobytes()
        j = self._B._where[key][-1]
        bid = int(self._bid[j])
        self._B.remove(p)
        self._bid[j] = self._bid[last]
        n = len(self._A)
        if n == 0:
            return
        if len(self._B) == 0:
            self._arg[:n] = _NONE
            self._dist[:n] = 0
            self.total = 0
            return
        hit = np.flatnonzero(self._arg[:n] == bid)
        if hit.size:
            rows = self._A.array[hit]
            dist, arg = self._nearest_chunked(rows)
            self.total += int((dist - self._dist[hit]).sum())
            self._dist[hit] = dist
            self._arg[hit] = arg

    def _nearest_chunked(self, rows, chunk_elems=1 << 22):
        step = max(1, chunk_elems // max(len(self._B), 1))
        parts = [self._nearest(rows[s:s + step]) for s in range(0, rows.shape[0], step)]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def bulk_load(self, A, B):
        """Initialise from scratch (empty state only); faster than repeated inserts."""
        if len(self._A) or len(self._B):
            raise RuntimeError("bulk_load needs an empty instance")
        for b in np.asarray(B, dtype=np.int64):
            j = self._B.add(b)
            self._bid = self._grow(self._bid, j, 0)
            self._bid[j] = self._next_id
            self._next_id += 1
        for a in np.asarray(A, dtype=np.int64):
            i = self._A.add(a)
            self._dist = self._grow(self._dist, i, 0)
            self._arg = self._grow(self._arg, i, _NONE)
        n = len(self._A)
        if n and len(self._B):
            if self.d <= KDTREE_MAX_DIM:
                # exact l1 search; only the one-off initial state, updates stay naive
                dist, j = cKDTree(self._B.array).query(self._A.array, k=1, p=1)
                dist, arg = np.rint(dist).astype(np.int64), self._bid[j]
            else:
                dist, arg = self._nearest_chunked(self._A.array)
            self._dist[:n], self._arg[:n] = dist, arg
            self.total = int(dist.sum())

    def exact(self) -> int:
        return self.total

    def distances(self) -> np.ndarray:
        return self._dist[: len(self._A)].copy()


class UniformChamfer:
    """Uniform-sampling estimator: ``|A| * mean(nn(a))`` over ``m`` uniform draws from A."""

    def __init__(self, d: int, oracle="auto", seed: int = 0):
        self.d = d
        self._A = PointStore(d)
        self.oracle: NNOracle = make_oracle(d, oracle) if isinstance(oracle, str) else oracle
        self.rng = random.Random(seed)

    @property
    def size_a(self):
        return len(self._A)

    @property
    def size_b(self):
        return len(self.oracle)

    def insert(self, point, side: str):
        self.apply_update(UpdateEvent(side, INSERT, point))

    def delete(self, point, side: str):
        self.apply_update(UpdateEvent(side, DELETE, point))

    def apply_update(self, ev: UpdateEvent):
        p = as_point(ev.point, self.d)
        if ev.side == A_SIDE:
            self._A.add(p) if ev.op == INSERT else self._A.remove(p)
        elif ev.side == B_SIDE:
            self.oracle.insert(p) if ev.op == INSERT else self.oracle.delete(p)
        else:
            raise ValueError(f"side must be 'A' or 'B', got {ev.side!r}")

    def query(self, m: int) -> ChamferEstimate:
        return uniform_query(self._A, m, self.oracle, self.rng)


def uniform_query(A: PointStore, m: int, oracle: NNOracle, rng) -> ChamferEstimate:
    n = len(A)
    if n == 0:
        raise ValueError("A is empty")
    if len(oracle) == 0:
        raise ValueError("B is empty")
    idx = [rng.randrange(n) for _ in range(m)]
    vals = oracle.values(A.array[idx]).astype(np.float64)
    est = n * float(vals.mean())
    return ChamferEstimate(est, m, est)

