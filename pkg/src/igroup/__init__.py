"""Individualized group learning.

Pool information from similar individuals to sharpen per-individual
inference: kernel similarity weights over exogenous covariates and/or
noisy individual estimates, weighted aggregation of estimates or convex
objectives, leave-one-out bandwidth selection, a seeded simulation
harness, and two application pipelines (weighted-quantile VaR
backtesting and DTW trajectory anomaly scoring).
"""

from ._backend import backend_name
from .aggregation import (
    AggregateEstimate,
    AggregationMethod,
    ObjectiveSpec,
    aggregate_estimators,
    check_loss,
    golden_section,
    minimize_weighted_objective,
    weighted_quantile,
)
from .bandwidth import CvConfig, CvReport, Omega0, cv_error, default_grid, loo_estimate, select_bandwidth
from .distances import DistanceMatrix, Trajectory, dtw_distance, dtw_matrix, euclidean
from .errors import (
    ConfigurationError,
    DegenerateGroupError,
    EmptyNeighborhoodError,
    IGroupError,
    InvalidBandwidthError,
    InvalidInputError,
    ObjectiveEvaluationError,
    RegressionError,
    SchemaError,
    SchemeMismatchError,
)
from .kernels import (
    BOXCAR,
    EPANECHNIKOV,
    GAUSSIAN,
    Bandwidth,
    KernelSpec,
    kernel_eval,
    kernel_weight,
    rule_of_thumb_bandwidth,
)
from .weights import (
    BootstrapPairs,
    GaussianModelSpec,
    IndividualRecord,
    Population,
    Scheme,
    WeightVector,
    ar1_cls_estimate,
    bootstrap_pairs,
    build_weights,
    conditional_density_estimate,
    covariate_weight,
    covariate_weight_matrix,
    estimate_weight_bootstrap,
    estimate_weight_gaussian,
    estimate_weight_matrix_bootstrap,
    estimate_weight_matrix_gaussian,
    kde_density,
    mean_estimate,
    pairwise_distances,
)

__version__ = "0.1.0"
