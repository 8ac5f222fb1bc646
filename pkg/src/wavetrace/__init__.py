"""Hamiltonian ray tracing with the wave-potential (diffraction) term."""

from .beam_model import (C_WAVE, Medium, PhysicalScales, RayState, TrajectoryBundle,
                         WavefrontFan, optical_quantum_bridge, quantum_optical_bridge,
                         to_dimensionless, from_dimensionless)
from .errors import (CausticError, ConfigError, DomainError, NumericalBlowupError,
                     OracleResolutionError, TurnedRayError)
from .integrator import IntegratorConfig, enforce_momentum_constraint, run, step
from .launch_profiles import LaunchProfile, algebraic, gaussian, sample_fan, two_beam

__version__ = "0.1.0"
