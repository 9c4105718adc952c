"""Affine-invariant k-nearest-neighbor regression."""

__version__ = "0.1.0"

from .estimator import (
    AffineInvariantKNNRegressor,
    EstimatorConfig,
    Prediction,
    predict,
    predict_batch,
    select_neighbors,
)
from .geometry import Sign, orientation_sign, segment_is_cut, side_of_hyperplane
from .metric import (
    Dataset,
    DistanceCount,
    DistanceProfile,
    SampledEstimate,
    rho_exact,
    rho_profile,
    rho_profile_sampled,
    rho_sampled,
)
from .synth import AffineMap, RegressionScenario, apply_affine, random_affine

__all__ = [
    "AffineInvariantKNNRegressor",
    "AffineMap",
    "Dataset",
    "DistanceCount",
    "DistanceProfile",
    "EstimatorConfig",
    "Prediction",
    "RegressionScenario",
    "SampledEstimate",
    "Sign",
    "apply_affine",
    "orientation_sign",
    "predict",
    "predict_batch",
    "random_affine",
    "rho_exact",
    "rho_profile",
    "rho_profile_sampled",
    "rho_sampled",
    "segment_is_cut",
    "select_neighbors",
    "side_of_hyperplane",
]
