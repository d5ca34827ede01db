"""Sliding-window experiments: data loading, outlier injection, runs and CSV output."""

from __future__ import annotations

import csv
import logging
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from itertools import groupby
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .baselines import BenchmarkChamfer, UniformChamfer
from .core import DEFAULT_EXTENT, EstimatorParams, GridQuantizer, InstanceConfig, chamfer_exact
from .estimator import DELETE, INSERT, DynamicChamfer, UpdateEvent
from .quadtree import A_SIDE, B_SIDE

log = logging.getLogger(__name__)

ALGORITHMS = ("ours", "uniform", "benchmark")
MODES = ("dynamic_B", "dynamic_AB")
CSV_HEADER = ["run_id", "update_index", "algorithm", "estimate", "exact",
              "relative_error", "update_time_ns", "query_time_ns"]


class DataError(ValueError):
    """Malformed or inconsistent input data."""


# -- loading ---------------------------------------------------------------

def load_dataset(path, fmt: str = "csv") -> np.ndarray:
    """Read vectors from ``path``.

    ``csv``: one vector per line, values separated by commas and/or
    whitespace; blank lines and lines starting with ``#`` are skipped.
    ``fvecs``: repeated records of a little-endian int32 dimension followed by
    that many little-endian float32 values.
    """
    path = Path(path)
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "fvecs":
        return _load_fvecs(path)
    raise DataError(f"unknown format {fmt!r}; expected 'csv' or 'fvecs'")


def _load_csv(path):
    rows, d = [], None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vec = [float(tok) for tok in line.replace(",", " ").split()]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if d is None:
                d = len(vec)
            elif len(vec) != d:
                raise DataError(f"{path}:{lineno}: expected {d} values, got {len(vec)}")
            rows.append(vec)
    if not rows:
        raise DataError(f"{path}: no vectors")
    return np.asarray(rows, dtype=np.float64)


def _load_fvecs(path):
    buf = path.read_bytes()
    if not buf:
        raise DataError(f"{path}: no vectors")
    if len(buf) < 4:
        raise DataError(f"{path}: truncated record at byte offset 0")
    d = int(np.frombuffer(buf, dtype="<i4", count=1)[0])
    if d <= 0:
        raise DataError(f"{path}: invalid dimension {d} at byte offset 0")
    rec = 4 * (d + 1)
    full = len(buf) // rec
    if len(buf) % rec:
        raise DataError(f"{path}: truncated record at byte offset {full * rec}")
    raw = np.frombuffer(buf, dtype="<i4").reshape(full, d + 1)
    bad = np.flatnonzero(raw[:, 0] != d)
    if bad.size:
        raise DataError(f"{path}: record at byte offset {int(bad[0]) * rec} has dimension "
                        f"{int(raw[bad[0], 0])}, expected {d}")
    return raw[:, 1:].copy().view("<f4").astype(np.float64)


def write_fvecs(path, X):
    X = np.asarray(X, dtype="<f4")
    out = np.empty((X.shape[0], X.shape[1] + 1), dtype="<f4")
    out[:, 0] = np.array(X.shape[1], dtype="<i4").view("<f4")
    out[:, 1:] = X
    Path(path).write_bytes(out.tobytes())


def inject_outlier(A) -> np.ndarray:
    """Append ``0.1 * |A| * (a* - c) + c`` where ``c`` is the mean and ``a*`` the point farthest from it.

    Ties for ``a*`` go to the lexicographically largest point.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 2:
        raise ValueError("outlier injection needs at least two points")
    c = A.mean(axis=0)
    dist = np.linalg.norm(A - c, axis=1)
    ties = A[dist == dist.max()]
    # ties go to the lexicographically largest point, independent of input order
    far = ties[np.lexsort(ties.T[::-1])[-1]]
    return np.vstack([A, 0.1 * A.shape[0] * (far - c) + c])


# -- configuration and rows ----------------------------------------------

@dataclass
class ExperimentConfig:
    a_path: Optional[str] = None
    b_path: Optional[str] = None
    fmt: str = "csv"
    window: int = 100
    samples: int = 150
    eps: float = 0.2
    alpha: float = 0.0
    boost_reps: int = 1
    seeds: Sequence[int] = (0, 1, 2, 3, 4)
    report_every: Optional[int] = None
    outlier: bool = False
    mode: str = "dynamic_B"
    ab_ratio: Optional[tuple] = None
    algorithms: Sequence[str] = ALGORITHMS
    extent: int = DEFAULT_EXTENT
    oracle: str = "auto"
    max_steps: Optional[int] = None
    compute_exact: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if not self.algorithms:
            raise ValueError("no algorithms selected")
        if self.report_every is not None and self.report_every < 1:
            raise ValueError("report_every must be >= 1")

    @property
    def cadence(self) -> int:
        return self.report_every or max(1, self.window // 4)


@dataclass
class ReportRow:
    run_id: int
    update_index: int
    algorithm: str
    estimate: float
    exact: float
    relative_error: float
    update_time_ns: float
    query_time_ns: float


def relative_error(exact: float, estimate: float) -> float:
    if exact > 0:
        return abs(exact - estimate) / exact
    return 0.0 if estimate == 0 else math.inf


def write_csv(rows: Iterable[ReportRow], path_or_file):
    rows = sorted(rows, key=lambda r: (r.run_id, r.update_index, ALGORITHMS.index(r.algorithm)))
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([getattr(r, f.name) for f in fields(ReportRow)])
    finally:
        if own:
            fh.close()


def read_csv(path) -> list[ReportRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise DataError(f"{path}: unexpected header {reader.fieldnames}")
        return [ReportRow(int(r["run_id"]), int(r["update_index"]), r["algorithm"],
                          float(r["estimate"]), float(r["exact"]), float(r["relative_error"]),
                          float(r["update_time_ns"]), float(r["query_time_ns"])) for r in reader]


def aggregate_rows(rows: Iterable[ReportRow]) -> list[dict]:
    """Per ``(algorithm, update_index)``: mean / min / max relative error across runs."""
    key = lambda r: (r.algorithm, r.update_index)
    out = []
    for (alg, idx), grp in groupby(sorted(rows, key=key), key=key):
        errs = [r.relative_error for r in grp]
        out.append({"algorithm": alg, "update_index": idx, "runs": len(errs),
                    "avg": sum(errs) / len(errs), "min": min(errs), "max": max(errs)})
    return out


# -- streams -----------------------------------------------------------------

def interleave(n_a: int, n_b: int, ratio: Optional[tuple] = None) -> list[str]:
    """Side labels for merging two streams in proportion to their sizes.

    With ``ratio=(ka, kb)`` the pattern is ``ka`` A's then ``kb`` B's,
    repeated; otherwise each step takes the side that is furthest behind its
    share.  Leftovers of either side are appended once the other runs out.
    """
    order = []
    i = j = 0
    if ratio is not None:
        ka, kb = ratio
        while i < n_a or j < n_b:
            take = min(ka, n_a - i)
            order += [A_SIDE] * take
            i += take
            take = min(kb, n_b - j)
            order += [B_SIDE] * take
            j += take
        return order
    while i < n_a or j < n_b:
        if j >= n_b or (i < n_a and i * n_b <= j * n_a):
            order.append(A_SIDE)
            i += 1
        else:
            order.append(B_SIDE)
            j += 1
    return order


def build_schedule(A: np.ndarray, B: np.ndarray, cfg: ExperimentConfig):
    """``(static_A, window_events, step_events)``.

    ``window_events`` fill the initial window; each step then inserts one
    event and deletes the oldest event still in the window.
    """
    if cfg.mode == "dynamic_B":
        if len(B) < cfg.window:
            raise ValueError(f"B stream has {len(B)} points, shorter than window {cfg.window}")
        stream = [(B_SIDE, b) for b in B]
        static = A
    else:
        labels = interleave(len(A), len(B), cfg.ab_ratio)
        ia = iter(A)
        ib = iter(B)
        stream = [(s, next(ia) if s == A_SIDE else next(ib)) for s in labels]
        if len(stream) < cfg.window:
            raise ValueError(f"stream has {len(stream)} events, shorter than window {cfg.window}")
        static = A[:0]
    initial = stream[: cfg.window]
    steps = stream[cfg.window:]
    if cfg.max_steps is not None:
        steps = steps[: cfg.max_steps]
    return static, initial, steps


def prepare_data(cfg: ExperimentConfig, A=None, B=None):
    """Load (unless given), inject the outlier, and quantize A and B with one shared map."""
    if A is None:
        if not cfg.a_path or not cfg.b_path:
            raise ValueError("dataset paths for A and B are required")
        A = load_dataset(cfg.a_path, cfg.fmt)
        B = load_dataset(cfg.b_path, cfg.fmt)
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise DataError(f"A and B must share one dimension, got {A.shape} and {B.shape}")
    if cfg.outlier:
        A = inject_outlier(A)
    q = GridQuantizer(cfg.extent).fit(np.vstack([A, B]))
    return q.transform(A), q.transform(B)


# -- runs -----------------------------------------------------------------

def _make(alg, d, seed, cfg):
    if alg == "ours":
        params = EstimatorParams(cfg.eps, cfg.alpha, cfg.samples, cfg.boost_reps)
        return DynamicChamfer(InstanceConfig(d=d, extent=cfg.extent, seed=seed), params, cfg.oracle)
    if alg == "uniform":
        return UniformChamfer(d, cfg.oracle, seed=seed)
    return BenchmarkChamfer(d)


def _estimate(alg, inst, cfg):
    if alg == "ours":
        # two-sided error metric: report the unshifted mean
        return inst.query_boosted().raw_mean
    if alg == "uniform":
        if cfg.boost_reps == 1:
            return inst.query(cfg.samples).value
        vals = sorted(inst.query(cfg.samples).value for _ in range(cfg.boost_reps))
        return vals[len(vals) // 2]
    return float(inst.exact())


def _load(alg, inst, static, initial):
    if alg == "benchmark" and len(static):
        inst.bulk_load(static, [p for s, p in initial if s == B_SIDE])
        for s, p in initial:
            if s == A_SIDE:
                inst.apply_update(UpdateEvent(s, INSERT, p))
        return
    for a in static:
        inst.apply_update(UpdateEvent(A_SIDE, INSERT, a))
    for s, p in initial:
        inst.apply_update(UpdateEvent(s, INSERT, p))


def _report_steps(static, initial, steps, cadence):
    """Report indices, skipping positions where A or B is empty, with the window content there."""
    window = deque(initial)
    out = []

    def emit(i):
        n_b = sum(1 for s, _ in window if s == B_SIDE)
        n_a = len(static) + len(window) - n_b
        if n_a and n_b:
            out.append((i, list(window)))
        else:
            log.warning("skipping report at step %d: A or B empty", i)

    emit(0)
    for i, ev in enumerate(steps, 1):
        window.popleft()
        window.append(ev)
        if i % cadence == 0:
            emit(i)
    return out


def _replay(alg, inst, initial, steps, report_at, cfg):
    """Drive one instance through the stream; ``{step: (estimate, update_ns, query_ns)}``."""
    window = deque(initial)
    out = {}
    spent = since = 0

    def report(i):
        nonlocal spent, since
        t0 = time.perf_counter_ns()
        est = _estimate(alg, inst, cfg)
        out[i] = (est, spent / since if since else 0.0, time.perf_counter_ns() - t0)
        spent = since = 0

    if 0 in report_at:
        report(0)
    clock = time.perf_counter_ns
    for i, (side, p) in enumerate(steps, 1):
        old_side, old_p = window.popleft()
        window.append((side, p))
        ins = UpdateEvent(side, INSERT, p)
        dele = UpdateEvent(old_side, DELETE, old_p)
        t0 = clock()
        inst.apply_update(ins)
        inst.apply_update(dele)
        spent += clock() - t0
        since += 1
        if i in report_at:
            report(i)
    return out


def run_seed(Aq, Bq, cfg: ExperimentConfig, seed: int) -> list[ReportRow]:
    """One sliding-window replay per algorithm for a single seed.

    Each algorithm runs through the whole stream on its own so that timings
    are not polluted by the other algorithms' memory traffic.
    """
    d = Aq.shape[1]
    static, initial, steps = build_schedule(Aq, Bq, cfg)
    algs = [a for a in ALGORITHMS if a in cfg.algorithms]
    reports = _report_steps(static, initial, steps, cfg.cadence)
    report_at = {i for i, _ in reports}

    results = {}
    for alg in algs:
        inst = _make(alg, d, seed, cfg)
        _load(alg, inst, static, initial)
        results[alg] = _replay(alg, inst, initial, steps, report_at, cfg)
        del inst

    rows = []
    for i, window in reports:
        if "benchmark" in results:
            exact = results["benchmark"][i][0]
        elif not cfg.compute_exact:
            exact = math.nan
        else:
            A_now = np.vstack([static] + [p[None, :] for s, p in window if s == A_SIDE])
            B_now = np.array([p for s, p in window if s == B_SIDE])
            exact = float(chamfer_exact(A_now, B_now))
        for alg in algs:
            est, upd, qry = results[alg][i]
            err = math.nan if math.isnan(exact) else relative_error(exact, est)
            rows.append(ReportRow(seed, i, alg, est, exact, err, upd, qry))
    return rows


def run_sliding_window(cfg: ExperimentConfig, A=None, B=None) -> list[ReportRow]:
    """Run every seed of ``cfg``; rows are ordered by ``(run_id, update_index)``."""
    Aq, Bq = prepare_data(cfg, A, B)
    rows = []
    for seed in cfg.seeds:
        log.info("seed %d: |A|=%d |B stream|=%d window=%d", seed, len(Aq), len(Bq), cfg.window)
        rows.extend(run_seed(Aq, Bq, cfg, seed))
    rows.sort(key=lambda r: (r.run_id, r.update_index, ALGORITHMS.index(r.algorithm)))
    return rows


def mean_error(rows: Iterable[ReportRow], algorithm: str) -> float:
    errs = [r.relative_error for r in rows if r.algorithm == algorithm]
    return sum(errs) / len(errs) if errs else math.nan
