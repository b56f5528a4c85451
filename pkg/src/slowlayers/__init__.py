"""Slow motion of transition layers for the p-Laplacian Allen-Cahn equation in one space dimension."""

from .errors import NumericalError, SlowLayersError, ValidationError
from .grid import Field, Grid
from .potential import PotentialParams, Regime, constants, eval_dF, eval_F, transition_energy
from .profiles import period, periodic_profile, solve_amplitude_for_period, standing_wave, support_radius
from .layers import (
    StepFunction,
    build_layer_datum,
    build_stationary_periodic,
    build_stationary_subcritical,
    hausdorff_distance,
    interfaces_of_field,
)
from .solver import SolverConfig, run, step

__all__ = [
    "Field",
    "Grid",
    "NumericalError",
    "PotentialParams",
    "Regime",
    "SlowLayersError",
    "SolverConfig",
    "StepFunction",
    "ValidationError",
    "build_layer_datum",
    "build_stationary_periodic",
    "build_stationary_subcritical",
    "constants",
    "eval_F",
    "eval_dF",
    "hausdorff_distance",
    "interfaces_of_field",
    "period",
    "periodic_profile",
    "run",
    "solve_amplitude_for_period",
    "standing_wave",
    "step",
    "support_radius",
    "transition_energy",
]
