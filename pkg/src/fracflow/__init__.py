"""Coupled nonlocal diffusion with three fractional kernels on a truncated line."""

from .config import Grid, Label, ProblemConfig, build_grid, config_from_mapping, load_config
from .errors import FracflowError, NumericalError, ValidationError
from .integrator import Trajectory, evolve, step_implicit
from .operator import NonlocalOperator, assemble, assemble_rescaled, energy

__version__ = "0.1.0"

__all__ = [
    "Grid", "Label", "ProblemConfig", "build_grid", "config_from_mapping", "load_config",
    "FracflowError", "NumericalError", "ValidationError",
    "Trajectory", "evolve", "step_implicit",
    "NonlocalOperator", "assemble", "assemble_rescaled", "energy",
]
