"""Dynamic weighted sampler.

A complete binary tree stored in a flat list: leaves are slots holding one
element each, and every internal entry caches the sum of its two children.
Freed slots go on a free list; the tree doubles when full and halves when
fewer than a quarter of the slots are in use, so its depth stays within
``log2(n) + 3``.
"""

from __future__ import annotations


class WeightedSampler:
    """Keyed collection of nonnegative weights with proportional sampling.

    ``insert``, ``remove``, ``reweight`` and ``sample`` walk one root-to-leaf
    path.  ``visits`` counts tree entries touched by those walks;
    ``rebuild_visits`` counts the entries rewritten when the tree is resized
    (amortised O(1) per operation).
    """

    __slots__ = ("_cap", "_tree", "_slot", "_keys", "_free", "visits", "rebuild_visits")

    def __init__(self, items=()):
        self._cap = 1
        self._tree = [0, 0]
        self._slot = {}
        self._keys = [None]
        self._free = [0]
        self.visits = 0
        self.rebuild_visits = 0
        for key, weight in dict(items).items():
            self.insert(key, weight)

    def __len__(self):
        return len(self._slot)

    def __contains__(self, key):
        return key in self._slot

    def __iter__(self):
        return iter(self._slot)

    def weight(self, key):
        return self._tree[self._cap + self._slot[key]]

    def items(self):
        tree, cap = self._tree, self._cap
        return [(k, tree[cap + s]) for k, s in self._slot.items()]

    def total_weight(self):
        return self._tree[1]

    def depth(self):
        return self._cap.bit_length() - 1

    def insert(self, key, weight):
        if key in self._slot:
            raise KeyError(f"duplicate key {key!r}")
        if weight < 0:
            raise ValueError("weights must be nonnegative")
        if not self._free:
            self._resize(self._cap * 2)
        s = self._free.pop()
        self._slot[key] = s
        self._keys[s] = key
        self._set(s, weight)

    def remove(self, key):
        try:
            s = self._slot.pop(key)
        except KeyError:
            raise KeyError(f"unknown key {key!r}") from None
        self._keys[s] = None
        self._set(s, 0)
        self._free.append(s)
        if self._cap > 1 and len(self._slot) < self._cap // 4:
            self._resize(self._cap // 2)

    def reweight(self, key, weight):
        if weight < 0:
            raise ValueError("weights must be nonnegative")
        try:
            s = self._slot[key]
        except KeyError:
            raise KeyError(f"unknown key {key!r}") from None
        self._set(s, weight)

    def sample(self, rng):
        """Draw a key with probability ``weight / total_weight``.

        ``rng`` is a :class:`random.Random`.  Integer totals use an exact
        integer draw; a draw landing exactly on a left-subtree boundary goes
        right.
        """
        tree = self._tree
        total = tree[1]
        if total <= 0:
            raise ValueError("cannot sample from an empty or all-zero sampler")
        if isinstance(total, int):
            x = rng.randrange(total)
        else:
            x = rng.random() * total
        cap = self._cap
        i = 1
        steps = 1
        while i < cap:
            i <<= 1
            left = tree[i]
            if x >= left and tree[i + 1] > 0:
                x -= left
                i += 1
            steps += 1
        self.visits += steps
        return self._keys[i - cap]

    def _set(self, s, weight):
        tree = self._tree
        i = self._cap + s
        tree[i] = weight
        i >>= 1
        steps = 1
        while i:
            tree[i] = tree[2 * i] + tree[2 * i + 1]
            i >>= 1
            steps += 1
        self.visits += steps

    def _resize(self, cap):
        old_tree, old_cap = self._tree, self._cap
        live = [(k, old_tree[old_cap + s]) for k, s in self._slot.items()]
        tree = [0] * (2 * cap)
        keys = [None] * cap
        slot = {}
        for s, (k, w) in enumerate(live):
            tree[cap + s] = w
            keys[s] = k
            slot[k] = s
        for i in range(cap - 1, 0, -1):
            tree[i] = tree[2 * i] + tree[2 * i + 1]
        self._cap, self._tree, self._keys, self._slot = cap, tree, keys, slot
        self._free = list(range(cap - 1, len(live) - 1, -1))
        self.rebuild_visits += 2 * cap

    def check(self):
        """Verify every cached sum against its children; raises AssertionError."""
        tree, cap = self._tree, self._cap
        for i in range(cap - 1, 0, -1):
            assert tree[i] == tree[2 * i] + tree[2 * i + 1], f"sum cache broken at {i}"
        for k, s in self._slot.items():
            assert self._keys[s] == k
        occupied = set(self._slot.values())
        for s in range(cap):
            if s not in occupied:
                assert tree[cap + s] == 0, f"free slot {s} carries weight"
        assert len(occupied) + len(self._free) == cap
