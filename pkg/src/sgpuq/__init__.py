"""Gradient-plasticity micro-pillar solver with sensitivity analysis,
Bayesian calibration, and forward uncertainty propagation."""

from .fem import (LoadProgram, Mesh1D, MixedField, NonConvergence,
                  SolverFailure, SolverSettings, StressStrainCurve,
                  run_compression)
from .material import MaterialPointState, SgpParams
from .model import SgpModel
from .qoi import cdf_error, strain_energy
from .sampling import ParamBox, lhs_sample, saltelli_matrices

__all__ = [
    "LoadProgram", "Mesh1D", "MixedField", "NonConvergence",
    "SolverFailure", "SolverSettings", "StressStrainCurve",
    "run_compression", "MaterialPointState", "SgpParams", "SgpModel",
    "cdf_error", "strain_energy", "ParamBox", "lhs_sample",
    "saltelli_matrices",
]

__version__ = "0.1.0"
