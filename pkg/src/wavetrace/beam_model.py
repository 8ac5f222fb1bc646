"""Domain types and the physical <-> dimensionless mappings.

Everything downstream of this module works in one dimensionless system:

* lengths are measured in units of the reference wavelength ``lambda0``
  (``xi = x / lambda0``, ``zeta = z / lambda0``),
* momenta in units of the reference momentum (``rho = p / p0``, or
  ``rho = k / k0`` for light),
* time as ``tau = c t / lambda0`` (optical) or ``tau = (p0/m) t / lambda0``
  (quantum).

The equations of motion in these variables are

    d xi / d tau  = rho
    d rho / d tau = -grad(V / 2E) + C_WAVE * grad(G),   G = (1/R) lap(R)

with ``C_WAVE = 1 / (8 pi^2)``.  Optical media enter through
``n^2 = 1 - V/E``; both front ends therefore share a single force law.

The dynamics is restricted to the (xi, zeta) plane, so every vector here
has two components ``(x, z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError

#: Coefficient of the wave-potential force, 1/(8 pi^2).
C_WAVE = 1.0 / (8.0 * math.pi**2)

SPEED_OF_LIGHT = 299_792_458.0
HBAR = 1.054_571_817e-34

FRONT_ENDS = ("optical", "quantum")


def _positive(name: str, value) -> None:
    if value is None:
        return
    if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value) and value > 0):
        raise ConfigError(name, f"must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class PhysicalScales:
    """Reference scales of one physical set-up.

    Use :meth:`optical` or :meth:`quantum` rather than the raw constructor.
    Quantities that have no meaning for the chosen front end are ``None``
    (e.g. the particle mass of a light beam).
    """

    front_end: str
    wavelength_lambda0: float
    wavenumber_k0: float
    angular_frequency_omega: float
    beam_half_width_w0: float
    epsilon: float
    light_speed_c: Optional[float] = None
    particle_mass_m: Optional[float] = None
    total_energy_E: Optional[float] = None
    reference_momentum_p0: Optional[float] = None
    action_hbar: Optional[float] = None

    def __post_init__(self):
        if self.front_end not in FRONT_ENDS:
            raise ConfigError("front_end", f"must be one of {FRONT_ENDS}, got {self.front_end!r}")
        for name in (
            "wavelength_lambda0", "wavenumber_k0", "angular_frequency_omega",
            "beam_half_width_w0", "epsilon", "light_speed_c", "particle_mass_m",
            "total_energy_E", "reference_momentum_p0", "action_hbar",
        ):
            _positive(name, getattr(self, name))
        if self.epsilon > 1.0:
            raise ConfigError("epsilon", f"must lie in (0, 1], got {self.epsilon}")
        if not math.isclose(self.wavenumber_k0 * self.wavelength_lambda0, 2 * math.pi, rel_tol=1e-12):
            raise ConfigError("wavenumber_k0", "must equal 2*pi/lambda0")

    # -- constructors -----------------------------------------------------
    @classmethod
    def optical(cls, wavelength: float, beam_half_width: float,
                light_speed: float = SPEED_OF_LIGHT) -> "PhysicalScales":
        """Scales of a monochromatic light beam of vacuum wavelength ``wavelength``."""
        _positive("wavelength_lambda0", wavelength)
        _positive("beam_half_width_w0", beam_half_width)
        _positive("light_speed_c", light_speed)
        k0 = 2 * math.pi / wavelength
        return cls(
            front_end="optical",
            wavelength_lambda0=wavelength,
            wavenumber_k0=k0,
            angular_frequency_omega=k0 * light_speed,
            beam_half_width_w0=beam_half_width,
            epsilon=wavelength / beam_half_width,
            light_speed_c=light_speed,
        )

    @classmethod
    def quantum(cls, mass: float, energy: float, beam_half_width: float,
                hbar: float = HBAR) -> "PhysicalScales":
        """Scales of a monoenergetic particle beam (mass ``mass``, energy ``energy``)."""
        _positive("particle_mass_m", mass)
        _positive("total_energy_E", energy)
        _positive("beam_half_width_w0", beam_half_width)
        _positive("action_hbar", hbar)
        p0 = math.sqrt(2.0 * mass * energy)
        k0 = p0 / hbar
        lam = 2 * math.pi / k0
        return cls(
            front_end="quantum",
            wavelength_lambda0=lam,
            wavenumber_k0=k0,
            angular_frequency_omega=energy / hbar,
            beam_half_width_w0=beam_half_width,
            epsilon=lam / beam_half_width,
            particle_mass_m=mass,
            total_energy_E=energy,
            reference_momentum_p0=p0,
            action_hbar=hbar,
        )

    # -- derived quantities ---------------------------------------------
    @property
    def momentum_unit(self) -> float:
        """Unit of momentum-like input: ``k0`` (optical) or ``p0`` (quantum)."""
        return self.wavenumber_k0 if self.front_end == "optical" else self.reference_momentum_p0

    @property
    def time_unit(self) -> float:
        """Physical duration of one unit of ``tau``."""
        if self.front_end == "optical":
            return self.wavelength_lambda0 / self.light_speed_c
        return self.wavelength_lambda0 * self.particle_mass_m / self.reference_momentum_p0

    def phase_velocity(self, n) -> np.ndarray:
        """Phase velocity ``c/n`` of light in a medium of index ``n``."""
        self._require_optical()
        return self.light_speed_c / np.asarray(n, dtype=float)

    def ray_velocity(self, k_magnitude) -> np.ndarray:
        """Ray (group) speed ``c |k| / k0`` for a wavevector of magnitude ``k_magnitude``."""
        self._require_optical()
        return self.light_speed_c * np.asarray(k_magnitude, dtype=float) / self.wavenumber_k0

    def _require_optical(self):
        if self.front_end != "optical":
            raise ConfigError("front_end", "velocity accessors are defined for the optical front end")


@dataclass(frozen=True)
class RayState:
    """Dimensionless state of one trajectory.

    ``amplitude_R`` is constant along the trajectory and ``launch_label``
    is the transverse position at which the ray left the plane ``zeta = 0``.
    """

    xi: float
    zeta: float
    rho_x: float
    rho_z: float
    tau: float
    amplitude_R: float = 1.0
    launch_label: float = 0.0

    @property
    def momentum_norm(self) -> float:
        return math.hypot(self.rho_x, self.rho_z)


def _finite_vec(name, v, size=2):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.size != size or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be a finite {size}-vector, got {v!r}")
    return arr


def to_dimensionless(scales: PhysicalScales, position, momentum, time: float) -> RayState:
    """Map a physical phase-space point onto the dimensionless system.

    Parameters
    ----------
    scales : PhysicalScales
    position : array_like, shape (2,)
        ``(x, z)`` in the same length unit as ``scales.wavelength_lambda0``.
    momentum : array_like, shape (2,)
        Particle momentum ``(p_x, p_z)`` (quantum) or wavevector
        ``(k_x, k_z)`` (optical).
    time : float

    Returns
    -------
    RayState
        With ``launch_label`` set to the transverse position.
    """
    pos = _finite_vec("position", position)
    mom = _finite_vec("momentum", momentum)
    if not math.isfinite(float(time)):
        raise DomainError(f"time must be finite, got {time!r}")
    lam = scales.wavelength_lambda0
    xi, zeta = pos / lam
    rho_x, rho_z = mom / scales.momentum_unit
    tau = float(time) / scales.time_unit
    return RayState(xi=float(xi), zeta=float(zeta), rho_x=float(rho_x), rho_z=float(rho_z),
                    tau=tau, launch_label=float(xi))


def from_dimensionless(scales: PhysicalScales, state: RayState):
    """Inverse of :func:`to_dimensionless`; returns ``(position, momentum, time)``."""
    lam = scales.wavelength_lambda0
    position = np.array([state.xi, state.zeta]) * lam
    momentum = np.array([state.rho_x, state.rho_z]) * scales.momentum_unit
    return position, momentum, state.tau * scales.time_unit


def optical_quantum_bridge(n_squared):
    """Convert a squared refractive index into the potential ratio ``V/E = 1 - n^2``.

    Works on scalars, arrays and callables (returning a new callable).
    """
    if callable(n_squared):
        return lambda xi, zeta: 1.0 - n_squared(xi, zeta)
    return 1.0 - np.asarray(n_squared, dtype=float) if np.ndim(n_squared) else 1.0 - float(n_squared)


def quantum_optical_bridge(v_over_e):
    """Inverse of :func:`optical_quantum_bridge`: ``n^2 = 1 - V/E``."""
    return optical_quantum_bridge(v_over_e)


MEDIUM_KINDS = ("vacuum", "refractive", "potential")


@dataclass(frozen=True)
class Medium:
    """A static medium in dimensionless form.

    ``field_fn(xi, zeta)`` returns ``n^2`` for ``kind="refractive"`` and
    ``V/E`` for ``kind="potential"``.  ``gradient_fn`` (optional) returns the
    analytic gradient of ``field_fn`` as a pair ``(d/dxi, d/dzeta)``; without
    it a central difference with step ``fd_step`` is used.

    Internally both kinds are reduced to ``V/E`` so that equivalent optical
    and quantum media produce identical samples and forces.
    """

    kind: str = "vacuum"
    field_fn: Optional[Callable] = None
    gradient_fn: Optional[Callable] = None
    fd_step: float = 1e-6
    description: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in MEDIUM_KINDS:
            raise ConfigError("medium.kind", f"must be one of {MEDIUM_KINDS}, got {self.kind!r}")
        if self.kind != "vacuum" and self.field_fn is None:
            raise ConfigError("medium.kind", f"{self.kind} medium needs a field function")

    @classmethod
    def vacuum(cls) -> "Medium":
        return cls("vacuum")

    @classmethod
    def linear(cls, kind: str, value: float = 0.0, slope_xi: float = 0.0,
               slope_zeta: float = 0.0) -> "Medium":
        """Medium whose field is ``value + slope_xi*xi + slope_zeta*zeta``.

        For ``kind="potential"`` the field is ``V/E`` (a uniform force
        ``-slope/2``); for ``kind="refractive"`` it is ``n^2``.
        """
        def f(xi, zeta):
            xi = np.asarray(xi, dtype=float)
            zeta = np.asarray(zeta, dtype=float)
            return value + slope_xi * xi + slope_zeta * zeta

        def g(xi, zeta):
            shape = np.broadcast(np.asarray(xi), np.asarray(zeta)).shape
            return np.full(shape, float(slope_xi)), np.full(shape, float(slope_zeta))

        return cls(kind, f, g, description=f"{kind}: {value} + {slope_xi}*xi + {slope_zeta}*zeta")

    # -- samples --------------------------------------------------------
    def v_over_e(self, xi, zeta) -> np.ndarray:
        """``V/E`` sampled at the given points."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "vacuum":
            return np.zeros(np.broadcast(xi, np.asarray(zeta)).shape)
        raw = np.asarray(self.field_fn(xi, zeta), dtype=float)
        if self.kind == "refractive":
            return optical_quantum_bridge(raw) + 0.0
        return raw + 0.0

    def n_squared(self, xi, zeta) -> np.ndarray:
        return quantum_optical_bridge(self.v_over_e(xi, zeta))

    def grad_v_over_e(self, xi, zeta):
        """Gradient of ``V/E`` as ``(d/dxi, d/dzeta)``."""
        xi = np.asarray(xi, dtype=float)
        zeta = np.asarray(zeta, dtype=float)
        if self.kind == "vacuum":
            z = np.zeros(np.broadcast(xi, zeta).shape)
            return z, z.copy()
        if self.gradient_fn is not None:
            gx, gz = self.gradient_fn(xi, zeta)
            gx = np.asarray(gx, dtype=float)
            gz = np.asarray(gz, dtype=float)
        else:
            h = self.fd_step
            gx = (np.asarray(self.field_fn(xi + h, zeta)) - np.asarray(self.field_fn(xi - h, zeta))) / (2 * h)
            gz = (np.asarray(self.field_fn(xi, zeta + h)) - np.asarray(self.field_fn(xi, zeta - h))) / (2 * h)
        if self.kind == "refractive":
            gx, gz = -gx, -gz
        return gx + 0.0, gz + 0.0

    def force(self, xi, zeta):
        """Classical part of the force, ``-grad(V/2E)``."""
        gx, gz = self.grad_v_over_e(xi, zeta)
        return -0.5 * gx + 0.0, -0.5 * gz + 0.0

    @property
    def is_vacuum(self) -> bool:
        return self.kind == "vacuum"

    def validate(self, xi, zeta) -> None:
        """Check the classical-admissibility invariant on sample points."""
        if self.kind == "vacuum":
            return
        v = self.v_over_e(xi, zeta)
        if not np.all(np.isfinite(v)):
            raise DomainError("medium field is not finite on the sampled points")
        if self.kind == "refractive" and np.any(self.n_squared(xi, zeta) <= 0):
            raise ConfigError("medium", "n^2 must be positive wherever it is sampled")
        if self.kind == "potential" and np.any(v >= 1):
            raise ConfigError("medium", "V/E must stay below 1 (classically allowed region)")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WavefrontFan:
    """Ordered bundle of rays sharing one value of ``tau``.

    The fan is stored column-wise (one array per state component).
    ``relative_amplitude`` is the launch amplitude without the overall
    normalisation ``amplitude_scale``; the wave potential only ever sees the
    former because it does not depend on normalisation.  ``ghost_amplitude``
    holds the relative amplitude at the label positions continued beyond
    each edge of the fan (``(low_side, high_side)``, nearest first), which
    the edge closure of the wave-potential stencils uses.
    """

    xi: np.ndarray
    zeta: np.ndarray
    rho_x: np.ndarray
    rho_z: np.ndarray
    launch_label: np.ndarray
    relative_amplitude: np.ndarray
    amplitude_scale: float = 1.0
    ghost_amplitude: Optional[tuple] = None
    step_index: int = 0
    common_tau: float = 0.0
    G_values: Optional[np.ndarray] = None
    G_gradient: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("xi", "zeta", "rho_x", "rho_z", "launch_label", "relative_amplitude"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.xi.size
        for name in ("zeta", "rho_x", "rho_z", "launch_label", "relative_amplitude"):
            if getattr(self, name).shape != (n,):
                raise ConfigError("fan", f"{name} must have shape ({n},)")
        if n < 5:
            raise ConfigError("fan.n_rays", f"a fan needs at least 5 rays, got {n}")
        if np.any(np.diff(self.launch_label) <= 0):
            raise ConfigError("fan", "launch labels must be strictly increasing")
        if np.any(self.relative_amplitude < 0):
            raise ConfigError("fan", "amplitudes must be non-negative")
        if self.ghost_amplitude is not None:
            lo, hi = self.ghost_amplitude
            object.__setattr__(self, "ghost_amplitude", (_frozen(lo), _frozen(hi)))
        if self.G_values is not None:
            object.__setattr__(self, "G_values", _frozen(self.G_values))
        if self.G_gradient is not None:
            object.__setattr__(self, "G_gradient", _frozen(self.G_gradient))

    @property
    def n_rays(self) -> int:
        return self.xi.size

    @property
    def amplitude_R(self) -> np.ndarray:
        """Carried amplitudes including the normalisation constant."""
        return self.amplitude_scale * self.relative_amplitude

    @property
    def rays(self) -> tuple:
        """The fan as a tuple of :class:`RayState` objects."""
        R = self.amplitude_R
        return tuple(
            RayState(float(self.xi[i]), float(self.zeta[i]), float(self.rho_x[i]),
                     float(self.rho_z[i]), float(self.common_tau), float(R[i]),
                     float(self.launch_label[i]))
            for i in range(self.n_rays)
        )

    def state_array(self) -> np.ndarray:
        """Stack ``(xi, zeta, rho_x, rho_z)`` into a ``(4, n_rays)`` array."""
        return np.array([self.xi, self.zeta, self.rho_x, self.rho_z])

    def with_state(self, y, **changes) -> "WavefrontFan":
        """Copy of the fan with the dynamical state replaced by ``y`` (shape ``(4, n)``)."""
        return replace(self, xi=y[0], zeta=y[1], rho_x=y[2], rho_z=y[3], **changes)

    def momentum_drift(self) -> float:
        """``max | |rho| - 1 |`` over the fan."""
        return float(np.max(np.abs(np.hypot(self.rho_x, self.rho_z) - 1.0)))


@dataclass(frozen=True, eq=False)
class TrajectoryBundle:
    """Recorded history of a simulation.

    Arrays indexed ``[record, ray]`` hold the state at the recorded steps
    (``steps``); all rays share the same record count by construction.
    ``diagnostics`` contains at least ``max_momentum_drift`` (``max | |rho| - 1 |``
    of the carried state after every step), ``constraint_correction_max``
    (the largest drift removed by the ``|rho| = 1`` renormalisation),
    ``monotone`` (per record), ``wall_time`` and ``status``.
    """

    steps: np.ndarray
    tau: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    rho_x: np.ndarray
    rho_z: np.ndarray
    G: np.ndarray
    amplitude_R: np.ndarray
    launch_label: np.ndarray
    config: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = self.xi.shape
        for name in ("zeta", "rho_x", "rho_z", "G"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if self.steps.shape != (shape[0],) or self.tau.shape != (shape[0],):
            raise ValueError("steps/tau must have one entry per record")

    @property
    def n_rays(self) -> int:
        return self.xi.shape[1]

    @property
    def n_records(self) -> int:
        return self.xi.shape[0]

    def ray(self, i: int) -> list:
        """Time series of ray ``i`` as :class:`RayState` objects."""
        return [
            RayState(float(self.xi[k, i]), float(self.zeta[k, i]), float(self.rho_x[k, i]),
                     float(self.rho_z[k, i]), float(self.tau[k]), float(self.amplitude_R[i]),
                     float(self.launch_label[i]))
            for k in range(self.n_records)
        ]

    def same_trajectories(self, other: "TrajectoryBundle") -> bool:
        """Bitwise equality of all recorded trajectory arrays."""
        names = ("steps", "tau", "xi", "zeta", "rho_x", "rho_z", "G", "launch_label")
        return all(
            getattr(self, n).shape == getattr(other, n).shape
            and getattr(self, n).tobytes() == getattr(other, n).tobytes()
            for n in names
        )
