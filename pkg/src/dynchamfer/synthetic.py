"""Synthetic stand-ins for the benchmark datasets.

``shape_pair`` samples two point clouds from the surfaces of a box-built
"chair" whose parts are jittered independently per cloud, which mimics a
pair of ShapeNet models.  ``mixture_pair`` draws two sets from a shared
Gaussian mixture and is used as a scaled stand-in for the high-dimensional
embedding datasets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# seat, back, four legs: (centre, half-extent)
_CHAIR = [
    ((0.0, 0.0, 0.45), (0.25, 0.25, 0.03)),
    ((0.0, 0.23, 0.8), (0.25, 0.02, 0.32)),
    ((-0.22, -0.22, 0.21), (0.02, 0.02, 0.21)),
    ((0.22, -0.22, 0.21), (0.02, 0.02, 0.21)),
    ((-0.22, 0.22, 0.21), (0.02, 0.02, 0.21)),
    ((0.22, 0.22, 0.21), (0.02, 0.02, 0.21)),
]


def _box_surface(rng, n, centre, half):
    """``n`` points uniform on the surface of an axis-aligned box."""
    c, h = np.asarray(centre), np.asarray(half)
    areas = np.array([h[1] * h[2], h[0] * h[2], h[0] * h[1]]) * 2
    axis = rng.choice(3, size=n, p=areas / areas.sum())
    pts = rng.uniform(-1, 1, size=(n, 3))
    pts[np.arange(n), axis] = rng.choice([-1.0, 1.0], size=n)
    return c + pts * h


def shape_cloud(n: int, seed: int = 0, jitter: float = 0.02, noise: float = 0.002) -> np.ndarray:
    rng = np.random.default_rng(seed)
    parts = [(np.asarray(c) + rng.normal(0, jitter, 3), np.abs(np.asarray(h) * (1 + rng.normal(0, jitter, 3))))
             for c, h in _CHAIR]
    areas = np.array([h[0] * h[1] + h[0] * h[2] + h[1] * h[2] for _, h in parts])
    counts = rng.multinomial(n, areas / areas.sum())
    cloud = np.concatenate([_box_surface(rng, k, c, h) for k, (c, h) in zip(counts, parts)])
    cloud += rng.normal(0, noise, cloud.shape)
    return cloud[rng.permutation(n)]


def shape_pair(n_a: int = 2000, n_b: int = 2000, seed: int = 0):
    return shape_cloud(n_a, seed=2 * seed + 1), shape_cloud(n_b, seed=2 * seed + 2)


def mixture_pair(n_a: int, n_b: int, d: int, k: int = 20, spread: float = 0.5, seed: int = 0):
    """Two draws from one Gaussian mixture with ``k`` centres uniform in the unit cube.

    ``spread`` is the ratio of the typical within-cluster distance to the
    typical distance between centres.  Embedding datasets sit near 0.5: a
    nearest neighbour is only a small factor closer than a random point.
    """
    rng = np.random.default_rng(seed)
    centres = rng.uniform(0, 1, size=(k, d))
    weights = rng.dirichlet(np.full(k, 2.0))

    def draw(n):
        lab = rng.choice(k, size=n, p=weights)
        return centres[lab] + rng.normal(0, spread / np.sqrt(12), size=(n, d))

    return draw(n_a), draw(n_b)


@dataclass(frozen=True)
class Surrogate:
    name: str
    d: int
    n_a: int
    n_b: int
    window: int
    samples: int


# dimensions, window sizes and sample sizes follow the published experiment table;
# set sizes are scaled down so every run fits a desk machine
SURROGATES = {
    "shapenet": Surrogate("shapenet", 3, 2000, 2000, 100, 150),
    "text": Surrogate("text", 300, 1900, 1200, 100, 150),
    "fmnist": Surrogate("fmnist", 784, 6000, 1000, 500, 200),
    "sift": Surrogate("sift", 128, 10000, 1000, 500, 300),
}


def make_surrogate(name: str, seed: int = 0):
    """``(A, B, sur)`` for one of :data:`SURROGATES`."""
    sur = SURROGATES[name]
    if name == "shapenet":
        A, B = shape_pair(sur.n_a, sur.n_b, seed)
    else:
        A, B = mixture_pair(sur.n_a, sur.n_b, sur.d, seed=seed)
    return A, B, sur
