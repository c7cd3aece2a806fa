"""Generative vs. discriminative learning of affine estimators for
partially-known linear Gaussian measurement models, plus a reproducible
Monte Carlo benchmark harness and CLI."""

__version__ = "0.1.0"

from .estimators import (
    AffineEstimator,
    FittedModel,
    KnownStatistics,
    PopulationMoments,
    Provenance,
    discriminative_asymptote,
    discriminative_estimator,
    discriminative_highsnr,
    fit_ml,
    generative_asymptote,
    generative_estimator,
    generative_highsnr,
    linear_population_moments,
    oracle_lmmse,
)
from .harness import (
    ExperimentConfig,
    MseReport,
    MseRow,
    SweepPoint,
    TrialOutcome,
    compute_mse,
    run_single_trial,
    run_trial,
    sweep_nt,
    sweep_snr,
)
from .moments import (
    Dataset,
    IllConditionedWarning,
    SampleMoments,
    SingularMatrixError,
    compute_moments,
    condition_estimate,
    spd_solve,
    woodbury_invert,
)
from .synth import (
    Cubic,
    GaussianPrior,
    Linear,
    Seed,
    Tanh,
    TrueModel,
    exp_decay_prior,
    random_measurement_matrix,
    sample_pairs,
    sample_targets,
)

__all__ = [
    "AffineEstimator",
    "Cubic",
    "Dataset",
    "ExperimentConfig",
    "FittedModel",
    "GaussianPrior",
    "IllConditionedWarning",
    "KnownStatistics",
    "Linear",
    "MseReport",
    "MseRow",
    "PopulationMoments",
    "Provenance",
    "SampleMoments",
    "Seed",
    "SingularMatrixError",
    "SweepPoint",
    "Tanh",
    "TrialOutcome",
    "TrueModel",
    "compute_moments",
    "compute_mse",
    "condition_estimate",
    "discriminative_asymptote",
    "discriminative_estimator",
    "discriminative_highsnr",
    "exp_decay_prior",
    "fit_ml",
    "generative_asymptote",
    "generative_estimator",
    "generative_highsnr",
    "linear_population_moments",
    "oracle_lmmse",
    "random_measurement_matrix",
    "run_single_trial",
    "run_trial",
    "sample_pairs",
    "sample_targets",
    "spd_solve",
    "sweep_nt",
    "sweep_snr",
    "woodbury_invert",
]
