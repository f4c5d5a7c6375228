"""Scalable estimation of 1PL/2PL/3PL item response models with coreset
subsampling of the conditional maximum-likelihood subproblems."""

from .errors import (
    ConfigError,
    DegenerateLabelsError,
    DegenerateScaleError,
    IrtError,
    NumericError,
)
from .model import (
    AbilityParameters,
    ItemParameters,
    LossKind,
    ModelKind,
    Orientation,
    ResponseMatrix,
    SignedDesign,
    build_signed_design,
    conditional_nll,
    full_nll,
    icc_probability,
    pointwise_loss,
)
from .solver import (
    FitConfig,
    FitResult,
    FitTrace,
    ParameterBounds,
    alternate_fit,
    conditional_gradient,
    fit_conditional,
    standardize,
)
from .leverage import (
    ScoreKind,
    ScoreVector,
    leverage_l1,
    leverage_l2,
    leverage_l2_sketched,
    lewis_weights_l1,
)
from .mu import MuEstimate, MuMethod, mu_exact_2d, mu_heuristic, sigma1_min_2d
from .coreset import (
    SamplingMethod,
    WeightedCoreset,
    build_coreset,
    load_coreset_csv,
    sample_weighted,
    save_coreset_csv,
    scores_2pl,
    scores_3pl,
)
from .baselines import (
    BaselineKind,
    distance_sampling_coreset,
    score_based_coreset,
    uniform_coreset,
)
from .synth import GenConfig, generate_synthetic

__version__ = "0.1.0"
