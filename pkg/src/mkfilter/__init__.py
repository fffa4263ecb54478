"""Feature screening for binary classification with metric-space predictors.

Each feature is a column of objects in a metric space (one-dimensional
empirical distributions, SPD matrices, or an arbitrary precomputed distance
matrix).  Features are scored with a symmetrized metric Kolmogorov-Smirnov
statistic, ranked, and selected either by model size or by a split-based
threshold that targets a false discovery rate.
"""
__version__ = "0.1.0"

from .data import FeatureColumn, LabeledDataset
from .emdf import DistanceProfile, build_profiles, emdf_value
from .exceptions import *  # noqa: F401,F403
from .knn import ClassificationReport, KnnConfig, evaluate_split, knn_predict, merge_distances
from .metrics import (
    EmpiricalDistribution,
    MetricKind,
    SpdMatrix,
    dist_cholesky,
    dist_frobenius,
    dist_log_cholesky,
    pairwise_distances,
    wasserstein_empirical,
)
from .mks import ScreeningResult, mks_hat_directed, omega_hat, omega_hat_naive, omega_matrix, screen_all
from .pool import CovariancePool, build_submatrix_pool, load_dataset, save_dataset
from .select import adaptive_threshold, fdp, fdr_select, split_indices, top_s, w_statistics
from .simgen import SimulationConfig, SimulationReport, run_simulation
