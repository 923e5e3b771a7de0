"""Hyperspectral target detection with a learned low-rank background subspace
and local graph-Laplacian regularized sparse coding."""

from .cube import (
    HsiCube,
    average_target_spectrum,
    flatten,
    load_cube,
    load_mask,
    load_spectrum,
    normalize,
    save_cube,
    save_mask,
    save_spectrum,
    unflatten,
)
from .detector import DetectionMap, RocCurve, detect, h0_residuals, h1_residuals, roc_auc, sam_baseline
from .errors import CubeFormatError, HsiError, NumericalError, ValidationError
from .graph import RegionGraph, RegionPartition, build_graphs, build_partition, run_lrb_glr
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .prox import SvdTriple, graph_trace, soft_threshold, spd_solve, svt, truncated_svd
from .subspace import (
    AdmmConfig,
    BackgroundSubspace,
    JointDictionary,
    SparseCode,
    learn_background,
    run_lrbsl,
    sparse_code,
)
from .synth import SyntheticSpec, generate_scene

__version__ = "0.1.0"
