"""Surrogate-accelerated Hamiltonian Monte Carlo.

Exact-gradient HMC plus two surrogate-driven variants (batch-trained
random-feature networks and an adaptively updated online version), a
Gaussian-process baseline surrogate, and chain diagnostics.  Proposals may
come from a cheap approximate flow, but the Metropolis correction always
uses the exact Hamiltonian, so the samplers target the true distribution
regardless of surrogate quality.
"""

__version__ = "0.1.0"

from .targets import (
    BananaTarget,
    GaussianTarget,
    LogisticRegressionTarget,
    TargetModel,
    softplus,
)
from .data import (
    Dataset,
    generate_lr_data,
    load_csv_dataset,
    save_csv_dataset,
    standardize_dataset,
)
from .surrogates import (
    HiddenNodes,
    RandomFeatureSurrogate,
    SurrogatePotential,
    TrainingSet,
    feature_map,
    feature_matrix,
    fit_surrogate,
    load_surrogate,
    potential_matching_distance,
    sample_hidden_nodes,
    save_surrogate,
    solve_output_weights,
)
from .gp import GaussianProcessSurrogate, fit_kernel_network
from .online import OnlineLeastSquares
from .hmc import (
    AdaptationSchedule,
    Chain,
    DivergenceError,
    HMCConfig,
    PhaseState,
    RngStreams,
    hamiltonian,
    leapfrog,
    mh_step,
    run_arns_hmc,
    run_gp_hmc,
    run_hmc,
    run_rns_hmc,
    sample_momentum,
    vanishing_schedule,
)
from .diagnostics import (
    DiagnosticsReport,
    REMTrace,
    ess,
    ess_per_dimension,
    rem_trace,
    speedup,
    summarize,
)

__all__ = [
    "__version__",
    "AdaptationSchedule",
    "BananaTarget",
    "Chain",
    "Dataset",
    "DiagnosticsReport",
    "DivergenceError",
    "GaussianProcessSurrogate",
    "GaussianTarget",
    "HMCConfig",
    "HiddenNodes",
    "LogisticRegressionTarget",
    "OnlineLeastSquares",
    "PhaseState",
    "REMTrace",
    "RandomFeatureSurrogate",
    "RngStreams",
    "SurrogatePotential",
    "TargetModel",
    "TrainingSet",
    "ess",
    "ess_per_dimension",
    "feature_map",
    "feature_matrix",
    "fit_kernel_network",
    "fit_surrogate",
    "generate_lr_data",
    "hamiltonian",
    "leapfrog",
    "load_csv_dataset",
    "load_surrogate",
    "mh_step",
    "potential_matching_distance",
    "rem_trace",
    "run_arns_hmc",
    "run_gp_hmc",
    "run_hmc",
    "run_rns_hmc",
    "sample_hidden_nodes",
    "sample_momentum",
    "save_csv_dataset",
    "save_surrogate",
    "softplus",
    "solve_output_weights",
    "speedup",
    "standardize_dataset",
    "summarize",
    "vanishing_schedule",
]
