"""Simulation, estimation and weak-dependence verification for NAR random fields."""

from .errors import DomainError, ParseError, SingularityError
from .lattice import SampleRegion, SiteIndex, chebyshev_distance, shell_sites, tail_sum_bound
from .network import (Network, WeightMatrix, CompanionMatrix, load_edge_list, row_normalized_weights,
                      companion_matrix, spectral_radius, check_network_decay, check_gram_diagonal_decay,
                      generate_power_decay_network)
from .nar_model import (NarParams, Panel, MomentOracle, generate_covariates, simulate_recursive,
                        simulate_ma_truncated, coupled_truncation, theoretical_moments)
from .estimation import (EstimationResult, log_likelihood, qmle, sigma_hat_matrix, sigma2_hat,
                         standardized_statistic, min_eigenvalue)
from .dependence import (DecayProfile, ShiftRegularity, shift_bound, power_decay_bound, exp_decay_bound,
                         delta_to_eta, estimate_delta, empirical_cov_decay, truncation_cov_check,
                         heredity_check)
from .montecarlo import (ExperimentConfig, ks_normality_test, run_lln_experiment, run_clt_experiment,
                         run_qmle_experiment)
from .seeding import derive_replication_seed

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "ParseError",
    "SingularityError",
    "SampleRegion",
    "SiteIndex",
    "chebyshev_distance",
    "shell_sites",
    "tail_sum_bound",
    "Network",
    "WeightMatrix",
    "CompanionMatrix",
    "load_edge_list",
    "row_normalized_weights",
    "companion_matrix",
    "spectral_radius",
    "check_network_decay",
    "check_gram_diagonal_decay",
    "generate_power_decay_network",
    "NarParams",
    "Panel",
    "MomentOracle",
    "generate_covariates",
    "simulate_recursive",
    "simulate_ma_truncated",
    "coupled_truncation",
    "theoretical_moments",
    "EstimationResult",
    "log_likelihood",
    "qmle",
    "sigma_hat_matrix",
    "sigma2_hat",
    "standardized_statistic",
    "min_eigenvalue",
    "DecayProfile",
    "ShiftRegularity",
    "shift_bound",
    "power_decay_bound",
    "exp_decay_bound",
    "delta_to_eta",
    "estimate_delta",
    "empirical_cov_decay",
    "truncation_cov_check",
    "heredity_check",
    "ExperimentConfig",
    "ks_normality_test",
    "run_lln_experiment",
    "run_clt_experiment",
    "run_qmle_experiment",
    "derive_replication_seed",
]
