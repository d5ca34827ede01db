"""Randomised property checks behind ``dynchamfer verify``.

Each check returns a :class:`PropertyResult`; none of them raise on a
failed property.  ``quick=True`` trims trial counts so the whole suite runs
in well under a minute.
"""

from __future__ import annotations

import math
import random
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .core import EstimatorParams, InstanceConfig, chamfer_exact
from .estimator import DynamicChamfer
from .nn_oracle import L2ToL1Embedding
from .quadtree import A_SIDE, B_SIDE, DynQuadTree
from .sampler import sample_matched_point, sampling_law
from .wsampler import WeightedSampler


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)


# -- independent references --------------------------------------------------

def matched_level(a, B, shift, levels: int) -> int:
    """Deepest level whose cell holds ``a`` and some point of ``B``, from coordinates alone."""
    xa = [int(c) + int(z) for c, z in zip(a, shift)]
    best = 0
    for b in B:
        xb = [int(c) + int(z) for c, z in zip(b, shift)]
        # cells agree at level l iff x >> (levels - l) agree in every coordinate
        diff = max((u ^ v).bit_length() for u, v in zip(xa, xb))
        best = max(best, levels - diff)
    return best


def reference_law(A, B, shift, extent: int) -> dict:
    """``{point_bytes: P(a)}`` with ``P(a)`` proportional to the matched cell side, per copy."""
    levels = int(math.log2(2 * extent))
    sides = [(np.asarray(a, dtype=np.int64).tobytes(), (2 * extent) >> matched_level(a, B, shift, levels))
             for a in A]
    total = sum(s for _, s in sides)
    law: dict = {}
    for k, s in sides:
        law[k] = law.get(k, Fraction(0)) + Fraction(s, total)
    return law


def random_trace(rng: random.Random, d: int, extent: int, events: int, nmax: int):
    """Yield ``(op, side, point)`` with a mix of fresh points and duplicates."""
    A, B = [], []
    for _ in range(events):
        if (rng.random() < 0.55 and len(A) + len(B) < nmax) or not (A or B):
            side = rng.choice((A_SIDE, B_SIDE))
            if rng.random() < 0.2 and (A or B):
                p = rng.choice(A or B)
            else:
                p = [rng.randrange(extent) for _ in range(d)]
            (A if side == A_SIDE else B).append(p)
            yield "insert", side, p
        else:
            side = A_SIDE if A and (not B or rng.random() < 0.5) else B_SIDE
            pool = A if side == A_SIDE else B
            yield "delete", side, pool.pop(rng.randrange(len(pool)))


# -- checks ----------------------------------------------------------------

def check_gamma_oracle(traces: int = 50, events: int = 1000, nmax: int = 200,
                       dims=(1, 2, 8), seed: int = 0, corrupt_at: Optional[int] = None) -> PropertyResult:
    """Incremental counters equal a from-scratch recount after every event.

    ``corrupt_at`` is a fault-injection hook: after that many events of the
    first trace one stored ``gamma`` is bumped, which must be detected.
    """
    t0 = time.perf_counter()
    master = random.Random(seed)
    steps = 0
    for t in range(traces):
        d = dims[t % len(dims)]
        extent = {1: 256, 2: 64}.get(d, 16)
        tree = DynQuadTree(InstanceConfig(d=d, extent=extent, seed=master.randrange(2**63)))
        for i, (op, side, p) in enumerate(random_trace(master, d, extent, events, nmax)):
            getattr(tree, op)(p, side)
            if corrupt_at is not None and t == 0 and i == corrupt_at:
                next(iter(tree.nodes.values())).gamma += 1
            steps += 1
            if tree.gamma_map() != tree.recompute_gammas_bruteforce():
                return PropertyResult("gamma_oracle", False,
                                      f"mismatch in trace {t} (d={d}) after event {i}",
                                      time.perf_counter() - t0)
    return PropertyResult("gamma_oracle", True, f"{traces} traces, {steps} events exact",
                          time.perf_counter() - t0)


def _random_instance(rng: random.Random, n_a: int, n_b: int, d: int, extent: int, seed: int):
    tree = DynQuadTree(InstanceConfig(d=d, extent=extent, seed=seed))
    A = [[rng.randrange(extent) for _ in range(d)] for _ in range(n_a)]
    B = [[rng.randrange(extent) for _ in range(d)] for _ in range(n_b)]
    for b in B:
        tree.insert(b, B_SIDE)
    for a in A:
        tree.insert(a, A_SIDE)
    return tree, A, B


def check_sampling_law(instances: int = 10, draws: int = 100_000, seed: int = 1,
                       tol: float = 0.02) -> PropertyResult:
    """Exact law matches the reference formula, and empirical draws are within ``tol`` in TV."""
    t0 = time.perf_counter()
    rng = random.Random(seed)
    worst = 0.0
    for i in range(instances):
        d = rng.choice((1, 2, 3))
        tree, A, B = _random_instance(rng, rng.randint(5, 100), rng.randint(1, 30), d, 1024, rng.randrange(2**32))
        ref = reference_law(A, B, tree.shift, 1024)
        exact = {k: p for k, (p, _) in sampling_law(tree).items()}
        if exact != ref:
            return PropertyResult("sampling_law", False, f"instance {i}: enumerated law differs from reference",
                                  time.perf_counter() - t0)
        srng = random.Random(rng.randrange(2**32))
        counts = Counter(sample_matched_point(tree, srng).point.tobytes() for _ in range(draws))
        tv = tv_distance({k: c / draws for k, c in counts.items()}, ref)
        worst = max(worst, tv)
        if tv >= tol:
            return PropertyResult("sampling_law", False, f"instance {i}: TV {tv:.4f} >= {tol}",
                                  time.perf_counter() - t0)
    return PropertyResult("sampling_law", True, f"{instances} instances, worst TV {worst:.4f}",
                          time.perf_counter() - t0)


def expectation_gap(tree: DynQuadTree) -> float:
    """Relative gap between ``sum_a P(a) x_a`` (exact arithmetic) and the Chamfer distance."""
    A, B = tree.points(A_SIDE), tree.points(B_SIDE)
    exact = chamfer_exact(A, B)
    law = sampling_law(tree)
    total = Fraction(tree.total_gamma_weight())
    nn = {a.tobytes(): int(np.abs(B - a).sum(axis=1).min()) for a in A}
    # x_a = nn(a) * total / side, sampled with probability P(a)
    expect = sum(p * nn[k] * total / side for k, (p, side) in law.items())
    if exact == 0:
        return float(abs(expect))
    return float(abs(expect - exact) / exact)


def check_expectation(instances: int = 20, seed: int = 2) -> PropertyResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(instances):
        tree, _, _ = _random_instance(rng, rng.randint(1, 60), rng.randint(1, 20), rng.choice((1, 2, 4)),
                                      4096, rng.randrange(2**32))
        worst = max(worst, expectation_gap(tree))
    ok = worst <= 1e-9
    return PropertyResult("estimator_expectation", ok, f"worst relative gap {worst:.2e}",
                          time.perf_counter() - t0)


def confidence_fractions(queries: int = 40, n: int = 500, d: int = 2, m: int = 2000,
                         boost: int = 9, eps: float = 0.2, seed: int = 3):
    """Fractions of plain and median-boosted raw means within ``eps`` of exact."""
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 2**16, size=(n, d))
    B = rng.integers(0, 2**16, size=(n, d))
    est = DynamicChamfer(InstanceConfig(d=d, extent=2**16, seed=seed), EstimatorParams(eps=eps, m=m))
    for b in B:
        est.insert(b, B_SIDE)
    for a in A:
        est.insert(a, A_SIDE)
    exact = est.exact()
    inside = lambda v: abs(v - exact) <= eps * exact
    plain = sum(inside(est.query().raw_mean) for _ in range(queries)) / queries
    boosted_hits = 0
    for _ in range(queries):
        raws = sorted(est.query().raw_mean for _ in range(boost))
        boosted_hits += inside(raws[boost // 2])
    return plain, boosted_hits / queries


def check_confidence(queries: int = 40, seed: int = 3) -> PropertyResult:
    t0 = time.perf_counter()
    plain, boosted = confidence_fractions(queries=queries, seed=seed)
    ok = plain >= 0.75 and boosted >= 0.95
    return PropertyResult("estimator_confidence", ok, f"within 20%: plain {plain:.2f}, boosted {boosted:.2f}",
                          time.perf_counter() - t0)


def embedding_fraction(pairs: int = 1000, d: int = 128, eps: float = 0.25, tol: float = 0.25, seed: int = 4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(2 * pairs, d))
    Y = L2ToL1Embedding(eps=eps, random_state=seed).fit_transform(X)
    true = np.linalg.norm(X[0::2] - X[1::2], axis=1)
    emb = np.abs(Y[0::2] - Y[1::2]).sum(axis=1)
    return float(np.mean(np.abs(emb - true) <= tol * true))


def check_embedding(pairs: int = 1000, seed: int = 4) -> PropertyResult:
    t0 = time.perf_counter()
    frac = embedding_fraction(pairs=pairs, seed=seed)
    return PropertyResult("embedding_distortion", frac >= 0.95, f"{frac:.3f} of pairs within 25%",
                          time.perf_counter() - t0)


def sampler_suite(ops: int = 100_000, seed: int = 5, tv_draws: int = 100_000):
    """``(consistent, worst_visits_over_bound, tv)`` for :class:`WeightedSampler`."""
    rng = random.Random(seed)
    ws = WeightedSampler()
    live = {}
    next_key = 0
    worst = -math.inf
    for i in range(ops):
        r = rng.random()
        before = ws.visits
        if r < 0.45 or not live:
            w = rng.randrange(1, 1000)
            ws.insert(next_key, w)
            live[next_key] = w
            next_key += 1
        elif r < 0.75:
            k = rng.choice(list(live)) if len(live) < 64 else next(iter(live))
            ws.remove(k)
            del live[k]
        elif r < 0.9:
            k = next(iter(live))
            w = rng.randrange(0, 1000)
            ws.reweight(k, w)
            live[k] = w
        else:
            if ws.total_weight() > 0:
                ws.sample(rng)
        n = max(len(ws), 2)
        worst = max(worst, (ws.visits - before) - (4 * math.log2(n) + 4))
    ws.check()
    consistent = ws.total_weight() == sum(live.values()) and dict(ws.items()) == live

    small = WeightedSampler()
    weights = {k: rng.randrange(1, 50) for k in range(100)}
    for k, w in weights.items():
        small.insert(k, w)
    tot = sum(weights.values())
    counts = Counter(small.sample(rng) for _ in range(tv_draws))
    tv = tv_distance({k: c / tv_draws for k, c in counts.items()}, {k: w / tot for k, w in weights.items()})
    return consistent, worst, tv


def check_weighted_sampler(ops: int = 100_000, seed: int = 5) -> PropertyResult:
    t0 = time.perf_counter()
    consistent, worst, tv = sampler_suite(ops=ops, seed=seed)
    ok = consistent and worst <= 0 and tv < 0.02
    detail = f"caches {'exact' if consistent else 'BROKEN'}, visit slack {-worst:.1f}, TV {tv:.4f}"
    return PropertyResult("weighted_sampler", ok, detail, time.perf_counter() - t0)


def run_all(quick: bool = False, corrupt_gamma: bool = False,
            report: Optional[Callable[[PropertyResult], None]] = None) -> list[PropertyResult]:
    scale = 0.1 if quick else 1.0
    checks = [
        lambda: check_gamma_oracle(traces=max(3, int(50 * scale)), events=int(1000 * (0.3 if quick else 1)),
                                   corrupt_at=10 if corrupt_gamma else None),
        lambda: check_weighted_sampler(ops=int(100_000 * scale)),
        lambda: check_sampling_law(instances=3 if quick else 10, draws=100_000),
        lambda: check_expectation(instances=5 if quick else 20),
        lambda: check_confidence(queries=40),
        lambda: check_embedding(pairs=1000),
    ]
    results = []
    for c in checks:
        r = c()
        results.append(r)
        if report:
            report(r)
    return results
