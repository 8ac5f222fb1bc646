"""Exception hierarchy shared by the simulation, oracle and CLI layers."""

from __future__ import annotations


class WavetraceError(Exception):
    """Base class for all package errors."""


class ConfigError(WavetraceError, ValueError):
    """Invalid configuration value.

    Parameters
    ----------
    key : str
        Dotted configuration key (or argument name) that is at fault.
    message : str
        Human readable explanation.
    """

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class DomainError(WavetraceError, ValueError):
    """Non-finite or otherwise unusable numerical input."""


class SimulationHalted(WavetraceError):
    """Base class for runtime failures that carry a partial result.

    ``partial`` holds the :class:`~wavetrace.beam_model.TrajectoryBundle`
    recorded up to the failure (``None`` when raised outside ``run``).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class CausticError(SimulationHalted):
    """Neighbouring trajectories crossed, so the wavefront is no longer single valued."""

    def __init__(self, step_index: int, ray_indices, partial=None):
        self.step_index = int(step_index)
        self.ray_indices = [int(i) for i in ray_indices]
        shown = self.ray_indices[:8]
        more = "" if len(self.ray_indices) <= 8 else f" (+{len(self.ray_indices) - 8} more)"
        super().__init__(
            f"trajectory crossing at step {self.step_index} between rays "
            f"{shown}{more} and their right neighbours",
            partial,
        )


class NumericalBlowupError(SimulationHalted):
    """The state became non-finite during a step."""

    def __init__(self, step_index: int, ray_index: int, partial=None):
        self.step_index = int(step_index)
        self.ray_index = int(ray_index)
        super().__init__(
            f"non-finite state at step {self.step_index} (first bad ray {self.ray_index})",
            partial,
        )


class TurnedRayError(SimulationHalted):
    """A ray's transverse momentum reached |rho_x| >= 1, so it no longer propagates forward."""

    def __init__(self, ray_indices, partial=None):
        self.ray_indices = [int(i) for i in ray_indices]
        super().__init__(f"rays {self.ray_indices[:8]} have |rho_x| >= 1", partial)


class OracleResolutionError(WavetraceError):
    """The grid oracle cannot resolve the requested field (aliasing or domain too small)."""
