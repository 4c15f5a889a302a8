"""Annealing with controlled swarm densities.

Particles follow a Langevin-type diffusion whose noise is modulated by a
nonlinear target density, plus a transport velocity that keeps the ensemble
tracking that density as the inverse temperature grows.
"""

from .density import DensityParams, rho, log_rho
from .dynamics import Ensemble, IntegratorSpec, Trajectory, simulate
from .potentials import DOUBLE_WELL, SIX_HUMP_CAMEL, Potential, get_potential
from .schedule import ColdStartWarning, CoolingSchedule

__version__ = "0.1.0"

__all__ = [
    "ColdStartWarning",
    "CoolingSchedule",
    "DOUBLE_WELL",
    "DensityParams",
    "Ensemble",
    "IntegratorSpec",
    "Potential",
    "SIX_HUMP_CAMEL",
    "Trajectory",
    "get_potential",
    "log_rho",
    "rho",
    "simulate",
]
