"""Beta item-response modeling: bounded abilities and difficulties, power
discrimination, MLE and variational fitting, synthetic data and classifier
evaluation."""

from ._core import (
    Beta3IrtError,
    ClassifierResponseSet,
    ModelParams,
    PosteriorSet,
    ResponseMatrix,
    __version__,
    ability_from_expected_response,
    beta_log_density,
    beta_shape,
    classifier_metrics,
    fit_mle,
    fit_vi,
    flag_noisy_items,
    icc_2plnd,
    icc_beta3,
    icc_regime,
    icc_slope_at_difficulty,
    inject_label_noise,
    posterior_point_estimates,
    predict,
    sample_dataset,
    simulate_classifier_panel,
    spearman,
    to_response_matrix,
    wilcoxon_signed_rank,
)

__all__ = [
    "Beta3IrtError",
    "ClassifierResponseSet",
    "ModelParams",
    "PosteriorSet",
    "ResponseMatrix",
    "__version__",
    "ability_from_expected_response",
    "beta_log_density",
    "beta_shape",
    "classifier_metrics",
    "fit_mle",
    "fit_vi",
    "flag_noisy_items",
    "icc_2plnd",
    "icc_beta3",
    "icc_regime",
    "icc_slope_at_difficulty",
    "inject_label_noise",
    "posterior_point_estimates",
    "predict",
    "sample_dataset",
    "simulate_classifier_panel",
    "spearman",
    "to_response_matrix",
    "wilcoxon_signed_rank",
]
