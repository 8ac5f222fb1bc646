"""Time integration of a ray fan under the wave-potential force.

The state of the fan is advanced with

    d xi / d tau  = rho
    d rho / d tau = -grad(V/2E) + c * C_WAVE * (dG/ds) t,   t perpendicular to rho

where ``c`` is ``IntegratorConfig.coupling_scale`` (1 for the physical
system, 0 for the geometrical-optics limit).

Method of lines
---------------
By default (``g_refresh="stage"``) the wave potential is recomputed from the
fan at every Runge-Kutta stage, so the scheme is a genuine fourth-order
method for the coupled system.  ``g_refresh="step"`` freezes ``dG/ds`` at the
start of each step; that variant is only first-order accurate in ``d_tau``
and is kept for comparison.

Short-wave damping
------------------
Grid-scale wiggles of the discrete fan (period of two ray spacings) are
not resolved by the three-point stencils and can grow where the amplitude
is small.  After each step an eighth-order low-pass filter is applied to
the ray positions and momenta across the fan:

    v <- v - alpha/256 * delta^8 v,   alpha = min(1, filter_rate * d_tau / da)

with ``da`` the launch-label spacing.  It removes the two-spacing mode at a
fixed rate per unit time and changes smooth data by O(da^8).  Set
``filter_rate=0`` to switch it off.

Sub-stepping
------------
The wave potential makes the fan dispersive: a ripple of label wavenumber
``k`` oscillates at ``sqrt(C/2) k^2``, so the largest stable explicit step
shrinks like ``da^2``.  When the dispersion number
``sqrt(C/2) (pi/da)^2 d_tau`` exceeds ``max_dispersion_number`` each step is
split into equal sub-steps (each followed by the filter); records are still
taken every ``d_tau``.  At the default fan (201 rays) and ``d_tau=0.1`` no
sub-stepping occurs.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .beam_model import C_WAVE, Medium, TrajectoryBundle, WavefrontFan
from .errors import (CausticError, ConfigError, NumericalBlowupError, SimulationHalted,
                     TurnedRayError)
from .launch_profiles import LaunchProfile, default_fan
from .wave_potential import (AMPLITUDE_MODELS, EDGE_CLOSURES, STENCIL_FORMS, PotentialKernel, augment,
                             extrapolation_weights, parametrize, potential_kernel,
                             transverse_units, _crossings)

SCHEMES = ("explicit_rk4", "symplectic_leapfrog")
CAUSTIC_POLICIES = ("halt", "sort_and_continue")
G_REFRESH = ("stage", "step")

#: Momentum drift above which an unconstrained vacuum run emits a warning.
DRIFT_WARNING = 1e-3

_C8 = np.array([1.0, -8.0, 28.0, -56.0, 70.0, -56.0, 28.0, -8.0, 1.0])
_W_FILTER = extrapolation_weights(4, 3)


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``enforce_constraint=None`` means "on in vacuum, off otherwise".
    When ``zeta_max`` is set the run stops at the first step at which every
    ray has reached ``zeta >= zeta_max``; ``n_steps`` is then an upper bound.
    """

    d_tau: float = 0.1
    n_steps: int = 1
    scheme: str = "explicit_rk4"
    go_limit_mode: bool = False
    enforce_constraint: Optional[bool] = None
    caustic_policy: str = "halt"
    coupling_scale: float = 1.0
    amplitude_model: str = "flux"
    edge_closure: str = "ghost"
    stencil_form: str = "amplitude"
    g_refresh: str = "stage"
    filter_rate: float = 1.2
    record_every: int = 1
    amplitude_floor: float = 1e-8
    zeta_max: Optional[float] = None
    max_dispersion_number: float = 12.0

    def __post_init__(self):
        if not (isinstance(self.d_tau, (int, float)) and math.isfinite(self.d_tau) and self.d_tau > 0):
            raise ConfigError("integrator.d_tau", f"must be a positive number, got {self.d_tau!r}")
        if isinstance(self.n_steps, bool) or not isinstance(self.n_steps, (int, np.integer)) or self.n_steps < 1:
            raise ConfigError("integrator.n_steps", f"must be an integer >= 1, got {self.n_steps!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError("integrator.scheme", f"must be one of {SCHEMES}, got {self.scheme!r}")
        if self.caustic_policy not in CAUSTIC_POLICIES:
            raise ConfigError("integrator.caustic_policy",
                              f"must be one of {CAUSTIC_POLICIES}, got {self.caustic_policy!r}")
        if self.amplitude_model not in AMPLITUDE_MODELS:
            raise ConfigError("integrator.amplitude_model", f"must be one of {AMPLITUDE_MODELS}")
        if self.edge_closure not in EDGE_CLOSURES:
            raise ConfigError("integrator.edge_closure", f"must be one of {EDGE_CLOSURES}")
        if self.stencil_form not in STENCIL_FORMS:
            raise ConfigError("integrator.stencil_form", f"must be one of {STENCIL_FORMS}")
        if self.g_refresh not in G_REFRESH:
            raise ConfigError("integrator.g_refresh", f"must be one of {G_REFRESH}")
        if not (math.isfinite(self.coupling_scale) and self.coupling_scale >= 0):
            raise ConfigError("integrator.coupling_scale", "must be a non-negative number")
        if not (math.isfinite(self.filter_rate) and self.filter_rate >= 0):
            raise ConfigError("integrator.filter_rate", "must be a non-negative number")
        if isinstance(self.record_every, bool) or int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError("output.record_every", "must be an integer >= 1")
        if self.zeta_max is not None and not (math.isfinite(self.zeta_max) and self.zeta_max > 0):
            raise ConfigError("integrator.zeta_max", "must be a positive number")
        if not (self.max_dispersion_number > 0):
            raise ConfigError("integrator.max_dispersion_number", "must be a positive number")
        if self.enforce_constraint not in (None, True, False):
            raise ConfigError("integrator.enforce_constraint", "must be true, false or unset")

    @property
    def coupled(self) -> bool:
        return not self.go_limit_mode and self.coupling_scale > 0

    def constraint_for(self, medium: Medium) -> bool:
        if self.enforce_constraint is None:
            return medium.is_vacuum
        if self.enforce_constraint and not medium.is_vacuum:
            raise ConfigError("integrator.enforce_constraint", "only valid for a vacuum medium")
        return bool(self.enforce_constraint)


def filter_strength(cfg: IntegratorConfig, label_spacing: float, h: Optional[float] = None) -> float:
    """Filter coefficient ``alpha`` for a step of length ``h`` (0 when the coupling is off)."""
    if not cfg.coupled or cfg.filter_rate == 0:
        return 0.0
    h = cfg.d_tau if h is None else h
    return min(1.0, cfg.filter_rate * h / label_spacing)


def dispersion_number(cfg: IntegratorConfig, label_spacing: float, h: Optional[float] = None) -> float:
    """Step size relative to the fastest wave-potential mode the fan resolves.

    Linearised about a straight fan, a transverse ripple of label wavenumber
    ``k`` oscillates with frequency ``sqrt(C/2) k^2`` (the ray counterpart
    of free-particle dispersion).  The explicit step resolves it when
    ``h * sqrt(C/2) (pi/da)^2`` stays moderate.
    """
    if not cfg.coupled:
        return 0.0
    h = cfg.d_tau if h is None else h
    return math.sqrt(0.5 * C_WAVE * cfg.coupling_scale) * math.pi**2 * h / label_spacing**2


def substeps(cfg: IntegratorConfig, label_spacing: float) -> int:
    """Number of equal sub-steps per step keeping the dispersion number bounded."""
    nu = dispersion_number(cfg, label_spacing)
    return max(1, int(math.ceil(nu / cfg.max_dispersion_number - 1e-12)))


def lowpass(v: np.ndarray, alpha: float) -> np.ndarray:
    """Eighth-order filter across the fan, with cubic ghost continuation at the edges.

    ``v`` may be one row or a stack of rows (filtered along the last axis).
    """
    e = augment(v, _W_FILTER)
    # symmetric pairing keeps the filter exactly mirror symmetric
    d = (70.0 * e[..., 4:-4]
         - 56.0 * (e[..., 3:-5] + e[..., 5:-3])
         + 28.0 * (e[..., 2:-6] + e[..., 6:-2])
         - 8.0 * (e[..., 1:-7] + e[..., 7:-1])
         + (e[..., :-8] + e[..., 8:]))
    return v - (alpha / 256.0) * d


class _Dynamics:
    """Right-hand side of the fan ODE for one fan geometry."""

    def __init__(self, fan: WavefrontFan, medium: Medium, cfg: IntegratorConfig):
        self.medium = medium
        self.cfg = cfg
        self.labels = np.asarray(fan.launch_label)
        self.amp = np.asarray(fan.relative_amplitude)
        self.ghosts = fan.ghost_amplitude
        self.coef = C_WAVE * cfg.coupling_scale
        self.sort_events = []
        self.kernel = PotentialKernel(self.labels, self.amp, self.ghosts, cfg.amplitude_model,
                                      cfg.edge_closure, cfg.stencil_form, cfg.amplitude_floor)

    def potential(self, y, step_index=0):
        """``(G, dG/ds)`` for state ``y``; zeros when uncoupled."""
        if not self.cfg.coupled:
            n = y.shape[1]
            return np.zeros(n), np.zeros(n)
        X, Z, PX, PZ = y
        if self.cfg.caustic_policy == "sort_and_continue":
            tx, tz = transverse_units(PX, PZ)
            if _crossings(X, Z, tx, tz).size:
                kw = dict(amplitude_model=self.cfg.amplitude_model, edge_closure=self.cfg.edge_closure,
                          stencil_form=self.cfg.stencil_form, amplitude_floor=self.cfg.amplitude_floor)
                return self._sorted_potential(y, tx, tz, step_index, kw)
        return self.kernel.from_positions(y[:2])

    def _sorted_potential(self, y, tx, tz, step_index, kw):
        X, Z, PX, PZ = y
        tbx, tbz = np.mean(tx), np.mean(tz)
        order = np.argsort(X * tbx + Z * tbz, kind="stable")
        lab = self.labels[order]
        # monotone pseudo-label: accumulated label distance in the sorted order
        pseudo = lab[0] + np.concatenate([[0.0], np.cumsum(np.abs(np.diff(lab)))])
        G, dG = potential_kernel(X[order], Z[order], PX[order], PZ[order], pseudo,
                                 self.amp[order], self.ghosts, **kw)
        if not self.sort_events or self.sort_events[-1] != step_index:
            self.sort_events.append(step_index)
        out_G = np.empty_like(G)
        out_dG = np.empty_like(dG)
        out_G[order] = G
        out_dG[order] = dG
        return out_G, out_dG

    def rhs(self, y, dG=None, step_index=0):
        X, Z, PX, PZ = y
        if dG is None:
            _, dG = self.potential(y, step_index)
        nrm = np.hypot(PX, PZ)
        fx, fz = self.medium.force(X, Z) if not self.medium.is_vacuum else (0.0, 0.0)
        c = self.coef
        return np.array([PX, PZ, fx + c * dG * (PZ / nrm), fz - c * dG * (PX / nrm)])


def _advance(dyn: _Dynamics, y, dG0, cfg: IntegratorConfig, step_index: int, h: Optional[float] = None):
    """One step of the configured scheme starting from ``y`` (with ``dG0`` at ``y``)."""
    h = cfg.d_tau if h is None else h
    frozen = cfg.g_refresh == "step"
    if cfg.scheme == "explicit_rk4":
        k1 = dyn.rhs(y, dG0)
        k2 = dyn.rhs(y + (0.5 * h) * k1, dG0 if frozen else None, step_index)
        k3 = dyn.rhs(y + (0.5 * h) * k2, dG0 if frozen else None, step_index)
        k4 = dyn.rhs(y + h * k3, dG0 if frozen else None, step_index)
        return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # kick-drift-kick leapfrog
    a0 = dyn.rhs(y, dG0)[2:]
    p_half = y[2:] + (0.5 * h) * a0
    x_new = y[:2] + h * p_half
    mid = np.concatenate([x_new, p_half])
    a1 = dyn.rhs(mid, dG0 if frozen else None, step_index)[2:]
    return np.concatenate([x_new, p_half + (0.5 * h) * a1])


def _full_step(dyn: _Dynamics, y, dG0, cfg: IntegratorConfig, step_index: int, m: int,
               label_spacing: float, constrain: bool):
    """``m`` filtered sub-steps covering one ``d_tau``; returns ``(y, drift, correction)``."""
    h = cfg.d_tau / m
    alpha = filter_strength(cfg, label_spacing, h)
    drift = correction = 0.0
    for j in range(m):
        if j:
            _, dG0 = dyn.potential(y, step_index)
        y = _advance(dyn, y, dG0, cfg, step_index, h)
        y, d, c = _post_step(y, alpha, constrain)
        drift, correction = max(drift, d), max(correction, c)
    return y, drift, correction


def _momentum_drift(y) -> float:
    return float(np.max(np.abs(np.hypot(y[2], y[3]) - 1.0)))


def _post_step(y, alpha, constrain):
    """Filter, then renormalise; returns ``(y, drift of y, drift before renormalising)``."""
    if alpha > 0:
        y = lowpass(y, alpha)
    before = _momentum_drift(y)
    if constrain:
        y = _constrain(y)
        return y, _momentum_drift(y), before
    return y, before, before


def _constrain(y):
    px = y[2]
    bad = np.nonzero(~(np.abs(px) < 1.0))[0]
    if bad.size:
        raise TurnedRayError(bad)
    y = y.copy()
    y[3] = np.copysign(np.sqrt(1.0 - px * px), y[3])
    return y


def enforce_momentum_constraint(fan: WavefrontFan) -> WavefrontFan:
    """Replace ``rho_z`` by ``sign(rho_z) * sqrt(1 - rho_x^2)`` on every ray.

    Raises
    ------
    TurnedRayError
        If some ray has ``|rho_x| >= 1``.
    """
    return fan.with_state(_constrain(fan.state_array()))


def _label_spacing(fan):
    lab = fan.launch_label
    return float((lab[-1] - lab[0]) / (lab.size - 1))


def step(fan: WavefrontFan, medium: Medium, cfg: IntegratorConfig) -> WavefrontFan:
    """Advance ``fan`` by one ``cfg.d_tau``.

    The returned fan carries ``G_values``/``G_gradient`` evaluated on its new
    state.  Amplitudes and labels are copied unchanged.
    """
    dyn = _Dynamics(fan, medium, cfg)
    y = fan.state_array()
    if cfg.caustic_policy == "halt" and cfg.coupled:
        parametrize(fan)
    _, dG0 = dyn.potential(y, fan.step_index)
    da = _label_spacing(fan)
    y_new, drift, _ = _full_step(dyn, y, dG0, cfg, fan.step_index, substeps(cfg, da), da,
                                 cfg.constraint_for(medium))
    if not np.all(np.isfinite(y_new)):
        raise NumericalBlowupError(fan.step_index + 1, int(np.nonzero(~np.all(np.isfinite(y_new), axis=0))[0][0]))
    if drift > DRIFT_WARNING and medium.is_vacuum and not cfg.constraint_for(medium):
        warnings.warn(f"|rho| drift {drift:.2e} exceeds {DRIFT_WARNING}", RuntimeWarning, stacklevel=2)
    G, dG = dyn.potential(y_new, fan.step_index + 1)
    tx, tz = transverse_units(y_new[2], y_new[3])
    return fan.with_state(y_new, step_index=fan.step_index + 1, common_tau=fan.common_tau + cfg.d_tau,
                          G_values=G, G_gradient=np.stack([dG * tx, dG * tz], axis=1))


def n_steps_for(zeta_max: float, d_tau: float, margin: float = 1.0) -> int:
    """Number of steps for an axial ray to reach ``margin * zeta_max``."""
    return max(1, int(math.ceil(margin * zeta_max / d_tau - 1e-9)))


def reaching(zeta_max: float, d_tau: float = 0.1, **kw) -> IntegratorConfig:
    """Config that runs until every ray has passed ``zeta_max`` (step cap: 1.5x axial)."""
    return IntegratorConfig(d_tau=d_tau, n_steps=n_steps_for(zeta_max, d_tau, 1.5), zeta_max=zeta_max, **kw)


def run(profile: LaunchProfile, medium: Medium, cfg: IntegratorConfig,
        fan: Optional[WavefrontFan] = None, n_rays: int = 201) -> TrajectoryBundle:
    """Integrate a launch fan for ``cfg.n_steps`` steps and record the history.

    Parameters
    ----------
    profile : LaunchProfile
        Used to build the default fan when ``fan`` is not given.
    medium : Medium
    cfg : IntegratorConfig
    fan : WavefrontFan, optional
        Explicit launch fan (overrides ``n_rays``).
    n_rays : int
        Ray count of the default fan.

    Raises
    ------
    CausticError, NumericalBlowupError, TurnedRayError
        With the partial :class:`TrajectoryBundle` in ``.partial``.
    """
    t0 = time.perf_counter()
    if fan is None:
        fan = default_fan(profile, n_rays)
    constrain = cfg.constraint_for(medium)
    medium.validate(fan.xi, fan.zeta)
    dyn = _Dynamics(fan, medium, cfg)
    da = _label_spacing(fan)
    m = substeps(cfg, da)
    alpha = filter_strength(cfg, da, cfg.d_tau / m)
    n = fan.n_rays

    rec_steps, rec_y, rec_G, monotone = [], [], [], []
    drift = np.zeros(cfg.n_steps + 1)
    correction = np.zeros(cfg.n_steps + 1)
    drift[0] = fan.momentum_drift()
    y = fan.state_array()
    status = "complete"
    error: Optional[SimulationHalted] = None
    warned = False

    for k in range(cfg.n_steps + 1):
        tx, tz = transverse_units(y[2], y[3])
        cross = _crossings(y[0], y[1], tx, tz)
        if cross.size and cfg.caustic_policy == "halt" and cfg.coupled:
            error = CausticError(k, cross)
            status = "caustic"
        G, dG = dyn.potential(y, k) if error is None else (np.full(n, np.nan), None)
        reached = cfg.zeta_max is not None and float(np.min(y[1])) >= cfg.zeta_max
        last_step = k == cfg.n_steps or reached
        if k % cfg.record_every == 0 or last_step or error is not None:
            rec_steps.append(k)
            rec_y.append(y)
            rec_G.append(G)
            monotone.append(cross.size == 0)
        if error is not None or last_step:
            break
        try:
            y_new, drift[k + 1], correction[k + 1] = _full_step(dyn, y, dG, cfg, k, m, da, constrain)
        except TurnedRayError as exc:
            error, status = exc, "turned_ray"
            break
        finite = np.all(np.isfinite(y_new), axis=0)
        if not np.all(finite):
            error = NumericalBlowupError(k + 1, int(np.nonzero(~finite)[0][0]))
            status = "blowup"
            break
        if not warned and medium.is_vacuum and not constrain and drift[k + 1] > DRIFT_WARNING:
            warnings.warn(f"|rho| drift {drift[k + 1]:.2e} exceeds {DRIFT_WARNING} at step {k + 1}",
                          RuntimeWarning, stacklevel=2)
            warned = True
        y = y_new

    last = rec_steps[-1]
    Y = np.array(rec_y)
    steps = np.array(rec_steps)
    diagnostics = {
        "status": status,
        "error": None if error is None else str(error),
        "max_momentum_drift": drift[: last + 1],
        "momentum_drift_max": float(np.max(drift[: last + 1])),
        "constraint_correction_max": float(np.max(correction[: last + 1])) if constrain else 0.0,
        "monotone": np.array(monotone),
        "low_confidence_rays": [0, 1, n - 2, n - 1],
        "sorted_steps": list(dyn.sort_events),
        "filter_alpha": alpha,
        "substeps": m,
        "constraint_enforced": constrain,
        "steps_completed": int(last),
        "reached_zeta_max": None if cfg.zeta_max is None else bool(np.min(Y[-1, 1]) >= cfg.zeta_max),
        "wall_time": time.perf_counter() - t0,
    }
    cfg_dict = asdict(cfg)
    cfg_dict["enforce_constraint"] = constrain
    cfg_dict["profile"] = profile.summary()
    cfg_dict["medium"] = medium.kind
    bundle = TrajectoryBundle(
        steps=steps, tau=fan.common_tau + steps * cfg.d_tau,
        xi=Y[:, 0], zeta=Y[:, 1], rho_x=Y[:, 2], rho_z=Y[:, 3], G=np.array(rec_G),
        amplitude_R=np.asarray(fan.amplitude_R).copy(), launch_label=np.asarray(fan.launch_label).copy(),
        config=cfg_dict, diagnostics=diagnostics,
    )
    if error is not None:
        error.partial = bundle
        raise error
    return bundle


def with_steps(cfg: IntegratorConfig, **changes) -> IntegratorConfig:
    """Convenience wrapper around :func:`dataclasses.replace`."""
    return replace(cfg, **changes)
