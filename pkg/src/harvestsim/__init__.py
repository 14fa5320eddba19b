"""Simulation and analysis of fishery harvesting strategies with density-dependent effort."""

from harvestsim.analysis import (
    attractor_period,
    bifurcation_scan,
    convergence_time,
    equilibria_proportional,
    equilibria_restricted,
    equilibria_threshold,
    sustainable_yield_curve,
)
from harvestsim.integrator import IntegrationConfig, NumericalFailure, Trajectory, integrate
from harvestsim.model import (
    Constant,
    DomainError,
    ModelParams,
    Proportional,
    ProportionalThreshold,
    RestrictedProportional,
    Rotational,
    Seasonal,
    SingularityError,
)
from harvestsim.scenarios import get_scenario, registry, run_scenario
from harvestsim.schedules import Gated, Sinusoid, SinePulse, SquareWave

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "Constant", "Proportional", "RestrictedProportional", "ProportionalThreshold",
    "Seasonal", "Rotational", "DomainError", "SingularityError",
    "SinePulse", "SquareWave", "Sinusoid", "Gated",
    "IntegrationConfig", "Trajectory", "NumericalFailure", "integrate",
    "equilibria_proportional", "equilibria_threshold", "equilibria_restricted",
    "sustainable_yield_curve", "bifurcation_scan", "attractor_period", "convergence_time",
    "registry", "get_scenario", "run_scenario",
]
