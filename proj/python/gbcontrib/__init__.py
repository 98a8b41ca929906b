"""Gradient-boosted regression trees with exact per-feature contributions."""

from ._core import (
    MODEL_FORMAT_VERSION,
    DataError,
    Dataset,
    DecisionRecord,
    DimensionError,
    Ensemble,
    Error,
    Explanation,
    GbdtParams,
    InvalidArgument,
    ModelFormatError,
    add_correlated_feature,
    add_gaussian_noise,
    correlation_experiment,
    fit,
    load_csv,
    make_synthetic_regression,
    noise_experiment,
    outlier_experiment,
    train_test_split,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
