"""Spectral factor-graph sample weighting for longitudinal cohorts."""

from ._core import (
    DataError,
    NumericalError,
    UsageError,
    adjacency,
    balanced_accuracy,
    cross_validate,
    f1_score,
    laplacian,
    mann_whitney_u,
    run_cli,
    sample_weights,
    select_m_changepoint,
    spectral_basis,
    standardize,
    stratified_kfold,
    symmetric_eigen,
    write_synthetic_cohort,
)

__all__ = [
    "DataError",
    "NumericalError",
    "UsageError",
    "adjacency",
    "balanced_accuracy",
    "cross_validate",
    "f1_score",
    "laplacian",
    "mann_whitney_u",
    "run_cli",
    "sample_weights",
    "select_m_changepoint",
    "spectral_basis",
    "standardize",
    "stratified_kfold",
    "symmetric_eigen",
    "write_synthetic_cohort",
]
