"""Folded multivariate normal models for compositional data.

A composition is a vector of positive parts summing to 1. The package
maps compositions to Euclidean space through a Box-Cox-style power
transform, models the transformed data as multivariate normal, and
folds the normal mass that falls outside the transform's image back
onto the simplex, yielding a flexible two-branch density. It provides
exact sampling, EM maximum-likelihood estimation with a profile search
over the transform parameter, bootstrap and curvature inference for
that parameter, back-transformed means and principal components, and a
simulation harness for parameter-recovery studies.
"""

from .analysis import (
    ContourGrid,
    SimplexPCA,
    StudyConfig,
    StudyReport,
    contour_grid,
    covariance_distance,
    euclidean_distance,
    frechet_mean,
    recovery_study,
    simplex_pca,
)
from .datasets import (
    ARCTIC_LAKE_INFLUENTIAL_ROWS,
    arctic_lake_path,
    load_arctic_lake,
)
from .errors import (
    DataValidationError,
    DegenerateCovarianceError,
    FoldedSimplexError,
    FoldFailureError,
    InvalidDimensionError,
    NonConcaveProfileError,
    NotPositiveDefiniteError,
    NumericFailureError,
    OutOfRegionError,
    SingularCovarianceError,
    SingularFoldError,
    UnsupportedDimensionError,
)
from .estimation import (
    AlphaSearchResult,
    FitResult,
    default_alpha_grid,
    em_fit,
    fit_alpha,
    logistic_normal_fit,
    profile_loglik,
)
from .geometry import (
    FoldBranch,
    alpha_clr,
    alpha_clr_inverse,
    alpha_power,
    alpha_transform,
    alpha_transform_inverse,
    closure,
    clr,
    clr_inverse,
    fold,
    fold_scale,
    helmert_submatrix,
    in_alpha_region,
    log_jacobian_folded,
    log_jacobian_inside,
    unfold,
    validate_compositions,
)
from .inference import (
    BootstrapTestResult,
    OutsideProbability,
    bootstrap_ci_alpha,
    bootstrap_test_alpha,
    curvature_ci_alpha,
    curvature_interval_from_profile,
    outside_probability,
)
from .model import (
    BranchLogDensities,
    FoldedNormalParams,
    branch_log_densities,
    log_density,
    log_sampling_density,
    logistic_normal_log_density,
    sample,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # geometry
    "FoldBranch",
    "helmert_submatrix",
    "closure",
    "validate_compositions",
    "clr",
    "clr_inverse",
    "alpha_power",
    "alpha_clr",
    "alpha_clr_inverse",
    "alpha_transform",
    "alpha_transform_inverse",
    "in_alpha_region",
    "fold_scale",
    "fold",
    "unfold",
    "log_jacobian_inside",
    "log_jacobian_folded",
    # model
    "FoldedNormalParams",
    "BranchLogDensities",
    "branch_log_densities",
    "log_density",
    "log_sampling_density",
    "logistic_normal_log_density",
    "sample",
    # estimation
    "FitResult",
    "AlphaSearchResult",
    "default_alpha_grid",
    "em_fit",
    "logistic_normal_fit",
    "profile_loglik",
    "fit_alpha",
    # inference
    "BootstrapTestResult",
    "OutsideProbability",
    "bootstrap_test_alpha",
    "bootstrap_ci_alpha",
    "curvature_ci_alpha",
    "curvature_interval_from_profile",
    "outside_probability",
    # analysis
    "SimplexPCA",
    "ContourGrid",
    "StudyConfig",
    "StudyReport",
    "frechet_mean",
    "simplex_pca",
    "covariance_distance",
    "euclidean_distance",
    "contour_grid",
    "recovery_study",
    # data
    "arctic_lake_path",
    "load_arctic_lake",
    "ARCTIC_LAKE_INFLUENTIAL_ROWS",
    # errors
    "FoldedSimplexError",
    "InvalidDimensionError",
    "DataValidationError",
    "OutOfRegionError",
    "FoldFailureError",
    "SingularFoldError",
    "NotPositiveDefiniteError",
    "DegenerateCovarianceError",
    "SingularCovarianceError",
    "NumericFailureError",
    "NonConcaveProfileError",
    "UnsupportedDimensionError",
]
