"""Risk calculators and minimax bounds for hierarchical Bayesian meta-linear-regression."""

from .exceptions import (
    DimensionError,
    DomainError,
    IllConditionedError,
    MetariskError,
    NoSourceTasksError,
    NotSymmetricError,
    ResourceBudgetError,
    SingularMatrixError,
    ValidationError,
)
from .fano import (
    DiscreteMeta,
    FanoInput,
    KLMatrix,
    LossSpec,
    PackingSet,
    exact_task_mi,
    gaussian_lr_kl,
    general_fano_bound,
    greedy_packing,
    iid_bound,
    kl_matrix,
    map_decoder_error,
    meta_bound,
    mi_bound_local_packing,
    mi_bound_mixture_packing,
    mi_bound_product_packing,
    partial_env_bound,
    regression_lower_bound,
)
from .matan import SingularExtremes, condition_number, singular_extremes, solve_spd, von_neumann_bound
from .model import (
    BoundConstants,
    Environment,
    HyperPrior,
    Observations,
    Task,
    bound_constants,
    environment_from_json,
    environment_to_json,
    gaussian_design,
    polynomial_design,
    sample_environment,
    sample_observations,
)
from .posterior import NovelPosterior, TauPosterior, map_estimate, novel_posterior, tau_posterior
from .risk import (
    RiskReport,
    UpperBoundReport,
    asymptotic_bound,
    bias_upper_bound,
    exact_bias,
    exact_risk,
    exact_variance,
    full_risk_report,
    mc_risk,
    novel_cov_smax_bound,
    risk_upper_bound,
    variance_upper_bound,
)

__version__ = "0.1.0"
