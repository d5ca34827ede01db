"""Dynamic Chamfer distance estimation with a randomly shifted quad-tree sampler."""

from .api import DynamicChamferEstimator
from .baselines import BenchmarkChamfer, UniformChamfer
from .core import (
    DEFAULT_EXTENT,
    EstimatorParams,
    GridQuantizer,
    InstanceConfig,
    chamfer_exact,
    l1_dist,
    quantize_dataset,
)
from .estimator import DELETE, INSERT, ChamferEstimate, DynamicChamfer, UpdateEvent
from .harness import ExperimentConfig, ReportRow, inject_outlier, load_dataset, run_sliding_window
from .nn_oracle import L2ToL1Embedding, embed_l2_to_l1, make_oracle
from .quadtree import A_SIDE, B_SIDE, DynQuadTree
from .wsampler import WeightedSampler

__version__ = "0.1.0"

__all__ = [
    "A_SIDE", "B_SIDE", "DEFAULT_EXTENT", "DELETE", "INSERT",
    "BenchmarkChamfer", "ChamferEstimate", "DynQuadTree", "DynamicChamfer",
    "DynamicChamferEstimator", "EstimatorParams", "ExperimentConfig", "GridQuantizer",
    "InstanceConfig", "L2ToL1Embedding", "ReportRow", "UniformChamfer", "UpdateEvent",
    "WeightedSampler", "chamfer_exact", "embed_l2_to_l1", "inject_outlier", "l1_dist",
    "load_dataset", "make_oracle", "quantize_dataset", "run_sliding_window",
]
