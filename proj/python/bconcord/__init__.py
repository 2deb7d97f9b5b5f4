from ._bconcord import (
    BconcordError,
    BconcordInvalidInput,
    BconcordNumericalError,
    __version__,
    accuracy,
    enumerate_patterns,
    fit_horseshoe,
    fit_spikeslab,
    flat_index,
    generate_truth,
    pair_count,
    project_pd,
    refit,
    relative_frobenius,
    sample_covariance,
    sample_mvn,
)

__all__ = [
    "BconcordError",
    "BconcordInvalidInput",
    "BconcordNumericalError",
    "__version__",
    "accuracy",
    "enumerate_patterns",
    "fit_horseshoe",
    "fit_spikeslab",
    "flat_index",
    "generate_truth",
    "pair_count",
    "project_pd",
    "refit",
    "relative_frobenius",
    "sample_covariance",
    "sample_mvn",
]
