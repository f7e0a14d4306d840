"""
lambdacavity - a Λ-type atom in a damped thermal cavity.

This package builds the reduced atomic master equations with cavity-induced
cross damping, a full atom + cavity reference model, and solvers and analyses
for steady states, trapping, detuning sweeps and probe absorption spectra.
"""

__version__ = "0.1.0"

# Import main classes/functions that users might want to access directly
from .core import (
    ModelParams,
    Superoperator,
    build_approx_liouvillian,
    build_reduced_liouvillian,
    effective_rates,
    response_function,
)
from .dynamics import (
    asymptotic_state,
    correlation_transform,
    evolve,
    laplace_state,
    steady_state,
)
from .oracle import FockConfig, build_full_liouvillian, reduce_to_atom
from .analysis import (
    absorption_spectrum,
    detuning_sweep,
    inversion_boundaries,
    sa_transform,
    sideband_linewidths,
)
from .config import RunConfig, parse_config
from .settings import SolverSettings

__all__ = [
    "ModelParams",
    "Superoperator",
    "build_approx_liouvillian",
    "build_reduced_liouvillian",
    "effective_rates",
    "response_function",
    "asymptotic_state",
    "correlation_transform",
    "evolve",
    "laplace_state",
    "steady_state",
    "FockConfig",
    "build_full_liouvillian",
    "reduce_to_atom",
    "absorption_spectrum",
    "detuning_sweep",
    "inversion_boundaries",
    "sa_transform",
    "sideband_linewidths",
    "RunConfig",
    "parse_config",
    "SolverSettings",
]
