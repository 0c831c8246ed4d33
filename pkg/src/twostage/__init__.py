"""Simulation and estimation toolkit for two-stage spread processes on Z^d.

The package simulates the two-stage contact process, its SIR variant and
the auxiliary linear pair process on finite truncations of Z^d, and
estimates the quantities that control the critical infection rate: exact
small-system transients, first-moment ODE thresholds, survival curves
with bisection for the critical rate, and the structured-walk
second-moment lower bound.
"""

__version__ = "0.1.0"

from .engine import (
    FULL,
    HEALTHY,
    RECOVERED,
    SEMI,
    LinearConfig,
    SparseConfig,
    TrajectorySummary,
    all_full_config,
    all_ones_linear,
    fully_infected_set,
    project_linear,
    simulate,
    simulate_linear,
    site_rates_contact,
    site_rates_sir,
)
from .errors import (
    BracketError,
    DomainError,
    ParameterError,
    ResourceError,
    TwoStageError,
)
from .lattice import Box, LatticeGeometry, Site, Torus, l1_norm, neighbors, origin, unit_vector
from .meanfield import (
    eigenvalues,
    is_subcritical,
    lambda_from_theta,
    lower_bound_lambda,
    moment_matrix,
    scaled_limit,
    solve_moments,
)
from .params import ProcessParams

__all__ = [
    "__version__",
    "Box",
    "BracketError",
    "DomainError",
    "FULL",
    "HEALTHY",
    "LatticeGeometry",
    "LinearConfig",
    "ParameterError",
    "ProcessParams",
    "RECOVERED",
    "ResourceError",
    "SEMI",
    "Site",
    "SparseConfig",
    "Torus",
    "TrajectorySummary",
    "TwoStageError",
    "all_full_config",
    "all_ones_linear",
    "eigenvalues",
    "fully_infected_set",
    "is_subcritical",
    "l1_norm",
    "lambda_from_theta",
    "lower_bound_lambda",
    "moment_matrix",
    "neighbors",
    "origin",
    "project_linear",
    "scaled_limit",
    "simulate",
    "simulate_linear",
    "site_rates_contact",
    "site_rates_sir",
    "solve_moments",
    "unit_vector",
]
