"""Group comparison tests for repeatedly observed random objects.

The test compares groups of subjects whose repeated observations live in a
bounded metric space (distributions, graph Laplacians, vectors, composites,
or anything with a precomputed distance matrix).  It detects differences in
Fréchet means, Fréchet variances, and within-subject variability
simultaneously, handles unequal numbers of repeats per subject, and
calibrates against a weighted chi-squared null law.
"""

__version__ = "0.1.0"

from .baselines import (AggregatedResult, ResamplePlan, af_test,
                        aggregate_p_values, balanced_resample,
                        subject_collapse)
from .cache import DistanceCache
from .dataset import Dataset, Group, Subject
from .errors import (CalibrationError, DomainError, FrechetrmError,
                     NumericError, ParseError, ShapeError, ValidationError)
from .estimators import DatasetSummary, GroupSummary, summarize
from .inference import (NullCalibration, TestComponents, TestResult,
                        compute_components, limiting_matrix,
                        positive_eigenvalues, run_test)
from .simulate import (GroupSpec, ScenarioConfig, StudyReport,
                       generate_dataset, run_study)
from .spaces import (CompositeObject, EuclideanVector, GraphLaplacian,
                     PrecomputedPoint, QuantileDistribution,
                     RawSampleDistribution, composite_distance,
                     euclidean_distance, frechet_mean, frobenius_distance,
                     object_distance, quantile_from_samples, symmetrize,
                     wasserstein_distance)
from .wchisq import monte_carlo_sf, quantile, weighted_chisq_sf

__all__ = [
    "AggregatedResult", "CalibrationError", "CompositeObject", "Dataset",
    "DatasetSummary", "DistanceCache", "DomainError", "EuclideanVector",
    "FrechetrmError", "GraphLaplacian", "Group", "GroupSpec", "GroupSummary",
    "NullCalibration", "NumericError", "ParseError", "PrecomputedPoint",
    "QuantileDistribution", "RawSampleDistribution", "ResamplePlan",
    "ScenarioConfig", "ShapeError", "StudyReport", "Subject",
    "TestComponents", "TestResult", "ValidationError", "af_test",
    "aggregate_p_values", "balanced_resample", "composite_distance",
    "compute_components", "euclidean_distance", "frechet_mean",
    "frobenius_distance", "generate_dataset", "limiting_matrix",
    "monte_carlo_sf", "object_distance", "positive_eigenvalues", "quantile",
    "quantile_from_samples", "run_study", "run_test", "subject_collapse",
    "summarize", "symmetrize", "wasserstein_distance", "weighted_chisq_sf",
]
