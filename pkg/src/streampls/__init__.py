"""Streaming rank-1 two-view PLS: solver, diffusion-based phase
predictions, landscape analysis, and a projected baseline."""

from .core import (
    DivergenceError,
    PlsIterate,
    StepConfig,
    StreamExhausted,
    Trajectory,
    TwoViewSample,
    alignment_error,
    gha_step,
    gha_step_missing,
    objective,
    random_unit_pair,
    read_trajectories_csv,
    run_gha,
    write_trajectories_csv,
)
from .datagen import (
    CovarianceModel,
    build_model,
    draw_pairs,
    gaussian_stream,
    gram_schmidt_orthonormal,
    load_two_view_csv,
    mask,
    masked_gaussian_stream,
    sample,
    save_two_view_csv,
)
from .diffusion import (
    LatentMoments,
    PhasePrediction,
    SpectralBasis,
    StepSizeTooLarge,
    beta_coeff,
    build_basis,
    from_spectral,
    noise_aggregate,
    ode_rhs,
    ode_solution,
    ou_moments,
    phase_times,
    recommended_eta,
    simulate_ou,
    simulate_ou_paths,
    to_spectral,
)
from .estimators import HebbianPls, MsgPls
from .experiment import (
    ConfigError,
    ExperimentConfig,
    PhaseEvents,
    build_config_model,
    compare_algorithms,
    detect_phases,
    iterations_to_alignment,
    ou_distribution_report,
    phase_prediction,
    run_experiment,
)
from .landscape import (
    StationaryPoint,
    enumerate_stationary_points,
    kkt_residual,
    lagrangian_grad,
    lagrangian_hessian_max_eig,
    lagrangian_value,
)
from .msg import (
    MsgIterate,
    capped_simplex_project,
    fantope_project,
    leading_pair,
    msg_objective_gap,
    msg_step,
)

__version__ = "0.1.0"

__all__ = [
    "CovarianceModel",
    "ConfigError",
    "DivergenceError",
    "ExperimentConfig",
    "HebbianPls",
    "LatentMoments",
    "MsgIterate",
    "MsgPls",
    "PhaseEvents",
    "PhasePrediction",
    "PlsIterate",
    "SpectralBasis",
    "StationaryPoint",
    "StepConfig",
    "StepSizeTooLarge",
    "StreamExhausted",
    "Trajectory",
    "TwoViewSample",
    "alignment_error",
    "beta_coeff",
    "build_basis",
    "build_config_model",
    "build_model",
    "capped_simplex_project",
    "compare_algorithms",
    "detect_phases",
    "draw_pairs",
    "enumerate_stationary_points",
    "fantope_project",
    "from_spectral",
    "gaussian_stream",
    "gha_step",
    "gha_step_missing",
    "gram_schmidt_orthonormal",
    "iterations_to_alignment",
    "kkt_residual",
    "lagrangian_grad",
    "lagrangian_hessian_max_eig",
    "lagrangian_value",
    "leading_pair",
    "load_two_view_csv",
    "mask",
    "masked_gaussian_stream",
    "msg_objective_gap",
    "msg_step",
    "noise_aggregate",
    "objective",
    "ode_rhs",
    "ode_solution",
    "ou_distribution_report",
    "ou_moments",
    "phase_prediction",
    "phase_times",
    "random_unit_pair",
    "read_trajectories_csv",
    "recommended_eta",
    "run_experiment",
    "run_gha",
    "sample",
    "save_two_view_csv",
    "simulate_ou",
    "simulate_ou_paths",
    "to_spectral",
    "write_trajectories_csv",
]
