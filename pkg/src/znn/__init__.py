"""Discrete-time zeroing neural network (ZNN) solvers for time-varying
linear systems, matrix (generalized) inverses and equality-constrained
convex programs, with the finite-difference and 0-stability tooling they
rest on."""

from .errors import ConfigError, NumericalError, ZnnError
from .fdforms import FdFormula, UpdateWeights, one_step_ahead_update, registry, verify_order
from .harness import ResidualTrace, RunConfig, run, sweep_order
from .models import DecaySpec, ZnnRun, residual
from .stability import StabilityReport, characteristic_polynomial, zero_stability

__all__ = [
    "ConfigError", "NumericalError", "ZnnError",
    "FdFormula", "UpdateWeights", "one_step_ahead_update", "registry", "verify_order",
    "ResidualTrace", "RunConfig", "run", "sweep_order",
    "DecaySpec", "ZnnRun", "residual",
    "StabilityReport", "characteristic_polynomial", "zero_stability",
]
__version__ = "0.1.0"
