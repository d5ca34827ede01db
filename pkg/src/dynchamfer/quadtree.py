"""Randomly shifted dynamic quad-tree with matched-point counters.

Geometry
--------
Input points live in ``[0, U)^d`` and are translated once by a random shift
``z in [0, U)^d``, so shifted points lie in ``[0, 2U)^d``.  Level ``l`` is the
grid of side ``2U / 2**l``; level 0 is a single root cell and level
``levels = log2(2U)`` has unit cells.

A cell is stored as a node when it is nonempty and either is the root or its
parent cell holds at least two points (counted with multiplicity).  A node
holding exactly one point, or sitting at the unit level, is a leaf.  The node
set is therefore a function of the current multisets and the shift alone.

Counters
--------
Every node ``v`` keeps ``gamma_a`` / ``gamma_b`` (points of A / B inside the
cell) and ``gamma``: the number of points of A whose lowest cell containing
some point of B is ``v``.  Each internal node owns a :class:`WeightedSampler`
over its children that contain no B point, weighted by ``gamma_a``; the tree
owns a sampler over nodes with ``gamma > 0`` weighted by ``side * gamma``.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter, defaultdict
from typing import NamedTuple, Optional

import numpy as np

from .core import InstanceConfig, as_point
from .wsampler import WeightedSampler

A_SIDE = "A"
B_SIDE = "B"


class CellId(NamedTuple):
    level: int
    coords: tuple


class Node:
    __slots__ = (
        "key", "level", "side", "parent", "rep",
        "gamma_a", "gamma_b", "gamma",
        "children", "child_sampler", "leaf_point",
    )

    def __init__(self, key, level, side, parent, rep):
        self.key = key
        self.level = level
        self.side = side
        self.parent = parent
        # any shifted point inside the cell; the cell is fixed geometry so this never goes stale
        self.rep = rep
        self.gamma_a = 0
        self.gamma_b = 0
        self.gamma = 0
        self.children = {}
        self.child_sampler = None
        self.leaf_point = None

    @property
    def count(self):
        return self.gamma_a + self.gamma_b

    def __repr__(self):
        return (f"Node(level={self.level}, side={self.side}, gamma_a={self.gamma_a}, "
                f"gamma_b={self.gamma_b}, gamma={self.gamma})")


def _side_of(side: str) -> str:
    if side not in (A_SIDE, B_SIDE):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return side


class DynQuadTree:
    """Quad-tree over two dynamic point multisets ``A`` and ``B``.

    Parameters
    ----------
    cfg : InstanceConfig
    rng : random.Random, optional
        Source of the shift; defaults to ``random.Random(cfg.seed)``.  Ignored
        when ``cfg.shift_override`` is set.
    """

    def __init__(self, cfg: InstanceConfig, rng: Optional[random.Random] = None):
        self.cfg = cfg
        self.d = cfg.d
        self.extent = cfg.extent
        self.levels = cfg.levels
        if cfg.shift_override is not None:
            shift = [int(s) for s in cfg.shift_override]
        else:
            rng = rng if rng is not None else random.Random(cfg.seed)
            shift = [rng.randrange(cfg.extent) for _ in range(cfg.d)]
        self.shift = np.array(shift, dtype=np.int64)
        self._rshift = np.arange(self.levels, -1, -1, dtype=np.int64)[:, None]
        self._hash_keys = cfg.d * 8 > 32
        self._prefix = [level.to_bytes(1, "little") for level in range(self.levels + 1)]
        self.nodes: dict[bytes, Node] = {}
        self.tree_sampler = WeightedSampler()
        self.A: Counter = Counter()
        self.B: Counter = Counter()
        self._raw: dict[bytes, np.ndarray] = {}
        self._na = 0
        self._nb = 0
        self.node_visits = 0

    # -- sizes -------------------------------------------------------------

    @property
    def size_a(self):
        return self._na

    @property
    def size_b(self):
        return self._nb

    @property
    def n(self):
        return max(self._na, self._nb)

    def side_length(self, level: int) -> int:
        return (2 * self.extent) >> level

    @property
    def root(self) -> Optional[Node]:
        return self.nodes.get(self._key(0, np.zeros(self.d, dtype=np.int64).tobytes()))

    # -- keys ---------------------------------------------------------------

    def _key(self, level, coord_bytes):
        if self._hash_keys:
            coord_bytes = hashlib.blake2b(coord_bytes, digest_size=16).digest()
        return level.to_bytes(1, "little") + coord_bytes

    def _path_keys(self, xs):
        """Lazily yield the key of the cell containing shifted point ``xs`` at each level."""
        raw = (xs[None, :] >> self._rshift).tobytes()
        step = 8 * self.d
        prefix = self._prefix
        if self._hash_keys:
            blake = hashlib.blake2b
            for level in range(self.levels + 1):
                chunk = raw[level * step:(level + 1) * step]
                yield level, prefix[level] + blake(chunk, digest_size=16).digest()
        else:
            for level in range(self.levels + 1):
                yield level, prefix[level] + raw[level * step:(level + 1) * step]

    def cell_of(self, node: Node) -> CellId:
        c = node.rep >> (self.levels - node.level)
        return CellId(node.level, tuple(int(v) for v in c))

    def _check(self, x):
        p = as_point(x, self.d)
        # negatives wrap to huge unsigned values, so one comparison covers both ends
        if (p.view(np.uint64) >= self.extent).any():
            raise ValueError(f"coordinates must lie in [0, {self.extent})")
        return p

    # -- sampler bookkeeping -----------------------------------------------

    def _sync_child(self, u: Node):
        """Keep ``u``'s entry in its parent's child sampler consistent."""
        parent = u.parent
        if parent is None:
            return
        cs = parent.child_sampler
        if u.gamma_b == 0 and u.gamma_a > 0:
            if cs is None:
                cs = parent.child_sampler = WeightedSampler()
            if u.key in cs:
                if cs.weight(u.key) != u.gamma_a:
                    cs.reweight(u.key, u.gamma_a)
            else:
                cs.insert(u.key, u.gamma_a)
        elif cs is not None and u.key in cs:
            cs.remove(u.key)

    def _sync_gamma(self, v: Node):
        ts = self.tree_sampler
        w = v.gamma * v.side
        if v.gamma > 0:
            if v.key in ts:
                if ts.weight(v.key) != w:
                    ts.reweight(v.key, w)
            else:
                ts.insert(v.key, w)
        elif v.key in ts:
            ts.remove(v.key)

    def _new_node(self, key, level, parent, xs):
        node = Node(key, level, self.side_length(level), parent, xs)
        self.nodes[key] = node
        if parent is not None:
            parent.children[key] = node
        return node

    # -- updates -------------------------------------------------------------

    def insert(self, x, side: str):
        """Insert point ``x`` into multiset ``side`` ('A' or 'B')."""
        side = _side_of(side)
        p = self._check(x)
        xs = p + self.shift
        pkey = p.tobytes()
        is_a = side == A_SIDE

        # structural pass: walk down, splitting the leaf we run into
        path = []
        touched = []
        parent = None
        nodes = self.nodes
        bottom = self.levels
        for level, key in self._path_keys(xs):
            node = nodes.get(key)
            if node is None:
                node = self._new_node(key, level, parent, xs)
                node.leaf_point = p
                if is_a:
                    node.gamma_a = 1
                else:
                    node.gamma_b = 1
                path.append(node)
                break
            was_leaf = not node.children and level < bottom
            if is_a:
                node.gamma_a += 1
            else:
                node.gamma_b += 1
            path.append(node)
            if level == bottom:
                break
            if was_leaf:
                # push the resident point one level down; x may follow it
                q = node.leaf_point
                node.leaf_point = None
                qs = q + self.shift
                qlevel = level + 1
                qkey = self._key(qlevel, (qs >> (bottom - qlevel)).tobytes())
                child = self._new_node(qkey, qlevel, node, qs)
                child.leaf_point = q
                child.gamma_a, child.gamma_b = node.gamma_a - is_a, node.gamma_b - (not is_a)
                touched.append(child)
            parent = node
        self.node_visits += len(path) + len(touched)
        for u in touched:
            self._sync_child(u)
        # child samplers hold only B-free cells; a node that already had B
        # points before this update has no entry to touch
        settled = 0 if is_a else 1
        for u in path:
            if u.gamma_b == settled:
                self._sync_child(u)

        # matched-count pass on the post-structural path
        if is_a:
            v_prime = self._lowest_with_b(path, 0)
            if v_prime is not None:
                v_prime.gamma += 1
                self._sync_gamma(v_prime)
            self._na += 1
        else:
            k = self._exclusive_len(path, 1)
            excl = path[len(path) - k:][::-1]  # v_1 (leaf) ... v_k
            v_prime = path[len(path) - k - 1] if k < len(path) else None
            if v_prime is not None and excl:
                v_prime.gamma -= excl[-1].gamma_a
                self._sync_gamma(v_prime)
            prev = 0
            for v in excl:
                v.gamma = v.gamma_a - prev
                prev = v.gamma_a
                self._sync_gamma(v)
            self._nb += 1

        (self.A if is_a else self.B)[pkey] += 1
        self._raw.setdefault(pkey, p)

    def delete(self, x, side: str):
        """Delete one copy of ``x`` from multiset ``side``."""
        side = _side_of(side)
        p = self._check(x)
        pkey = p.tobytes()
        is_a = side == A_SIDE
        bag = self.A if is_a else self.B
        if bag.get(pkey, 0) == 0:
            raise KeyError(f"point {p.tolist()} is not in {side}")
        xs = p + self.shift

        path = []
        for _level, key in self._path_keys(xs):
            node = self.nodes[key]
            path.append(node)
            if not node.children:
                break

        # matched-count pass on the pre-structural path
        if is_a:
            v_prime = self._lowest_with_b(path, 0)
            if v_prime is not None:
                v_prime.gamma -= 1
                self._sync_gamma(v_prime)
            self._na -= 1
        else:
            k = self._exclusive_len(path, 1)
            excl = path[len(path) - k:]
            v_prime = path[len(path) - k - 1] if k < len(path) else None
            moved = 0
            for v in excl:
                moved += v.gamma
                if v.gamma:
                    v.gamma = 0
                    self._sync_gamma(v)
            if v_prime is not None and moved:
                v_prime.gamma += moved
                self._sync_gamma(v_prime)
            self._nb -= 1

        # structural pass: decrement, then contract below the first node left with <= 1 point
        for v in path:
            if is_a:
                v.gamma_a -= 1
            else:
                v.gamma_b -= 1
        self.node_visits += len(path)
        cut = None
        for v in path:
            if v.gamma_a + v.gamma_b <= 1:
                cut = v
                break
            if v.gamma_b == 0:
                self._sync_child(v)
        if cut is not None:
            if cut.count == 0:
                self._drop_subtree(cut)
            else:
                if cut.children:
                    leaf = cut
                    while leaf.children:
                        leaf = next(c for c in leaf.children.values() if c.count)
                    cut.leaf_point = leaf.leaf_point
                    for c in list(cut.children.values()):
                        self._drop_subtree(c)
                    cut.child_sampler = None
                self._sync_child(cut)

        bag[pkey] -= 1
        if bag[pkey] == 0:
            del bag[pkey]
            if pkey not in self.A and pkey not in self.B:
                del self._raw[pkey]

    @staticmethod
    def _lowest_with_b(path, exclude):
        for v in reversed(path):
            if v.gamma_b > exclude:
                return v
        return None

    @staticmethod
    def _exclusive_len(path, own):
        """Number of deepest path nodes whose only B points are the ``own`` copy being updated."""
        k = 0
        for v in reversed(path):
            if v.gamma_b > own:
                break
            k += 1
        return k

    def _drop_subtree(self, node: Node):
        stack = [node]
        while stack:
            u = stack.pop()
            stack.extend(u.children.values())
            if u.key in self.tree_sampler:
                self.tree_sampler.remove(u.key)
            parent = u.parent
            if parent is not None and parent.key in self.nodes:
                cs = parent.child_sampler
                if cs is not None and u.key in cs:
                    cs.remove(u.key)
                parent.children.pop(u.key, None)
            del self.nodes[u.key]
            self.node_visits += 1

    # -- queries -------------------------------------------------------------

    def path_of(self, x):
        """Stored nodes whose cells contain ``x``, root first."""
        xs = self._check(x) + self.shift
        out = []
        for _level, key in self._path_keys(xs):
            node = self.nodes.get(key)
            if node is None:
                break
            out.append(node)
            if not node.children:
                break
        return out

    def matched_node_of(self, x):
        """``(CellId, side)`` of the lowest cell holding ``x`` and some point of B."""
        p = self._check(x)
        if self.A.get(p.tobytes(), 0) == 0:
            raise KeyError(f"point {p.tolist()} is not in A")
        if self._nb == 0:
            raise ValueError("B is empty; no point of A is matched")
        v = self._lowest_with_b(self.path_of(p), 0)
        return self.cell_of(v), v.side

    def points(self, side: str) -> np.ndarray:
        """Current multiset ``side`` as an ``(n, d)`` array, duplicates repeated."""
        bag = self.A if _side_of(side) == A_SIDE else self.B
        rows = [self._raw[k] for k, c in bag.items() for _ in range(c)]
        return np.array(rows, dtype=np.int64).reshape(-1, self.d)

    def total_gamma_weight(self):
        return self.tree_sampler.total_weight()

    def gamma_map(self):
        """Incremental counters as ``{CellId: (gamma_a, gamma_b, gamma)}``."""
        return {self.cell_of(v): (v.gamma_a, v.gamma_b, v.gamma) for v in self.nodes.values()}

    def recompute_gammas_bruteforce(self):
        """Recount every stored cell from the raw multisets and the shift.

        Shares nothing with the incremental state except ``A``, ``B`` and
        ``shift``; used as the test oracle for the update rules.
        """
        L = self.levels
        counts = defaultdict(lambda: [0, 0])
        pts = []
        for bag, s in ((self.A, 0), (self.B, 1)):
            for pkey, mult in bag.items():
                xs = [int(c) + int(z) for c, z in zip(self._raw[pkey], self.shift)]
                cells = [CellId(l, tuple(c >> (L - l) for c in xs)) for l in range(L + 1)]
                pts.append((cells, s, mult))
                for cell in cells:
                    counts[cell][s] += mult

        def stored(cell):
            if cell.level == 0:
                return True
            parent = CellId(cell.level - 1, tuple(c >> 1 for c in cell.coords))
            return sum(counts.get(parent, (0, 0))) >= 2

        out = {cell: [ca, cb, 0] for cell, (ca, cb) in counts.items() if stored(cell)}
        if self.B:
            for cells, s, mult in pts:
                if s != 0:
                    continue
                lowest = None
                for cell in cells:
                    if cell not in out:
                        break
                    if out[cell][1] > 0:
                        lowest = cell
                out[lowest][2] += mult
        return {cell: tuple(v) for cell, v in out.items()}

    def check_invariants(self):
        """Assert structural and sampler consistency; raises AssertionError."""
        tot = 0
        for v in self.nodes.values():
            assert v.count > 0, "empty node retained"
            if v.children:
                assert v.gamma_a == sum(c.gamma_a for c in v.children.values())
                assert v.gamma_b == sum(c.gamma_b for c in v.children.values())
                expect = {c.key: c.gamma_a for c in v.children.values() if c.gamma_b == 0}
                got = dict(v.child_sampler.items()) if v.child_sampler is not None else {}
                assert expect == got, f"child sampler out of sync at {self.cell_of(v)}"
                v.child_sampler is None or v.child_sampler.check()
            else:
                assert v.leaf_point is not None
                assert v.count == 1 or v.level == self.levels
            assert v.gamma >= 0
            assert v.gamma == 0 or v.gamma_b > 0
            if v.gamma:
                assert self.tree_sampler.weight(v.key) == v.gamma * v.side
                tot += v.gamma * v.side
            else:
                assert v.key not in self.tree_sampler
        assert self.tree_sampler.total_weight() == tot
        self.tree_sampler.check()
        if self._nb:
            assert sum(v.gamma for v in self.nodes.values()) == self._na
