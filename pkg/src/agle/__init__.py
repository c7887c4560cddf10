"""Adaptive-neighborhood linear graph embedding.

Joint learning of a probabilistic neighbor graph, a low-rank
self-representation, and a row-orthogonal, column-sparse linear
projection, solved by ADMM, plus the evaluation harness around it
(PCA preprocessing, class-balanced splits, 1-NN scoring, grid sweeps).
"""

from .data_io import DatasetManifest, SyntheticSpec, load_dataset, make_blobs, save_dataset
from .errors import FormatError, NumericalError
from .graph import AffinityGraph, DegreePair, degrees, init_affinity, knn_mask, update_affinity
from .kernels import ThinSVD, procrustes, spd_solve, svt, thin_svd
from .pipeline import (
    ExperimentPlan,
    PCABasis,
    PlanSummary,
    TrialResult,
    knn1_accuracy,
    normalize_columns,
    pca_reduce,
    run_plan,
    split,
)
from .simplex import SimplexProblem, SimplexSolution, kkt_residual, oracle_solve, solve_simplex
from .solver import (
    Hyperparams,
    IterationLog,
    SolverState,
    SparseProjection,
    fit,
    fit_state,
    initialize,
    objective,
    select_features,
    transform,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityGraph",
    "DatasetManifest",
    "DegreePair",
    "ExperimentPlan",
    "FormatError",
    "Hyperparams",
    "IterationLog",
    "NumericalError",
    "PCABasis",
    "PlanSummary",
    "SimplexProblem",
    "SimplexSolution",
    "SolverState",
    "SparseProjection",
    "SyntheticSpec",
    "ThinSVD",
    "TrialResult",
    "degrees",
    "fit",
    "fit_state",
    "init_affinity",
    "initialize",
    "kkt_residual",
    "knn1_accuracy",
    "knn_mask",
    "load_dataset",
    "make_blobs",
    "normalize_columns",
    "objective",
    "oracle_solve",
    "pca_reduce",
    "procrustes",
    "run_plan",
    "save_dataset",
    "select_features",
    "solve_simplex",
    "spd_solve",
    "split",
    "svt",
    "thin_svd",
    "transform",
    "update_affinity",
]
