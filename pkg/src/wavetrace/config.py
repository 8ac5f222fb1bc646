"""Run configuration: flat dotted keys, validation, and object construction.

Configuration files are TOML documents; nested tables and dotted keys are
equivalent, so both of these set the same value::

    profile.epsilon = 0.25

    [profile]
    epsilon = 0.25

Values that depend on others may be given as ``"auto"``; they are resolved
after all overrides are applied and the resolved values are what
``summary.json`` records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .beam_model import Medium
from .errors import ConfigError
from .integrator import IntegratorConfig, n_steps_for
from .launch_profiles import (LaunchProfile, algebraic, custom_samples, gaussian, sample_fan,
                              two_beam)
from .oracles import GridSpec, default_grid, rayleigh_range

AUTO = "auto"

#: Every accepted key with its default value.
DEFAULTS: dict[str, Any] = {
    "front_end": "optical",
    "profile.kind": "gaussian",
    "profile.epsilon": 0.25,
    "profile.N": 1,
    "profile.base": "algebraic",
    "profile.xi0": 0.0,
    "profile.scale": 1.0,
    "profile.samples": "",
    "medium.kind": "vacuum",
    "medium.value": 0.0,
    "medium.slope_xi": 0.0,
    "medium.slope_zeta": 0.0,
    "fan.n_rays": 201,
    "fan.xi_min": AUTO,
    "fan.xi_max": AUTO,
    "fan.amplitude_floor": 1e-8,
    "integrator.d_tau": 0.1,
    "integrator.zeta_max": AUTO,
    "integrator.n_steps": AUTO,
    "integrator.scheme": "explicit_rk4",
    "integrator.go_limit_mode": False,
    "integrator.enforce_constraint": AUTO,
    "integrator.caustic_policy": "halt",
    "integrator.coupling_scale": 1.0,
    "integrator.amplitude_model": "flux",
    "integrator.edge_closure": "ghost",
    "integrator.stencil_form": "amplitude",
    "integrator.g_refresh": "stage",
    "integrator.filter_rate": 1.2,
    "integrator.max_dispersion_number": 12.0,
    "output.dir": "out",
    "output.record_every": 1,
    "output.detector_zeta": AUTO,
    "output.bin_width": AUTO,
    "output.prominence": 0.2,
    "output.plot_rays": 81,
    "oracle.half_width": AUTO,
    "oracle.n_points": AUTO,
    "oracle.n_steps": 64,
}

_DOC = {
    "front_end": "optical | quantum",
    "profile.kind": "gaussian | algebraic | two_beam | custom_samples",
    "profile.epsilon": "lambda0 / w0, in (0, 1]",
    "profile.N": "order of the algebraic profile (also the two_beam base)",
    "profile.base": "two_beam base profile: gaussian | algebraic",
    "profile.xi0": "two_beam half separation (units of lambda0)",
    "profile.scale": "overall amplitude normalisation",
    "profile.samples": "CSV file with columns xi,R (custom_samples)",
    "medium.kind": "vacuum | refractive (optical) | potential (quantum)",
    "medium.value": "n^2 (refractive) or V/E (potential) at the origin",
    "medium.slope_xi": "d(field)/d(xi)",
    "medium.slope_zeta": "d(field)/d(zeta)",
    "fan.n_rays": "number of rays (>= 5)",
    "fan.xi_min": "lowest launch label; auto: -3/eps (gaussian) or -6/eps (algebraic)",
    "fan.xi_max": "highest launch label; auto: mirror of xi_min",
    "fan.amplitude_floor": "minimum launch amplitude relative to the peak",
    "integrator.d_tau": "time step",
    "integrator.zeta_max": "stop once every ray passed this zeta; auto: 4*pi/eps^2",
    "integrator.n_steps": "step cap; auto: 1.5 * zeta_max / d_tau",
    "integrator.scheme": "explicit_rk4 | symplectic_leapfrog",
    "integrator.go_limit_mode": "drop the wave-potential force",
    "integrator.enforce_constraint": "renormalise |rho| = 1 (vacuum only); auto: on in vacuum",
    "integrator.caustic_policy": "halt | sort_and_continue",
    "integrator.coupling_scale": "multiplier of the wave-potential coefficient",
    "integrator.amplitude_model": "flux | transported",
    "integrator.edge_closure": "ghost | one_sided",
    "integrator.stencil_form": "amplitude | log",
    "integrator.g_refresh": "stage | step",
    "integrator.filter_rate": "short-wave filter rate (0 disables)",
    "integrator.max_dispersion_number": "sub-step when the dispersive step number exceeds this",
    "output.dir": "output directory",
    "output.record_every": "record every k-th step",
    "output.detector_zeta": "detector plane; auto: 2*pi/eps^2",
    "output.bin_width": "detector histogram bin width; auto: 0.1/eps",
    "output.prominence": "relative prominence threshold of a fringe",
    "output.plot_rays": "maximum number of trajectories drawn in pattern.svg",
    "oracle.half_width": "oracle grid half width; auto",
    "oracle.n_points": "oracle grid points; auto",
    "oracle.n_steps": "oracle propagation steps",
}

_CHOICES = {
    "front_end": ("optical", "quantum"),
    "profile.kind": ("gaussian", "algebraic", "two_beam", "custom_samples"),
    "profile.base": ("gaussian", "algebraic"),
    "medium.kind": ("vacuum", "refractive", "potential"),
    "integrator.scheme": ("explicit_rk4", "symplectic_leapfrog"),
    "integrator.caustic_policy": ("halt", "sort_and_continue"),
    "integrator.amplitude_model": ("flux", "transported"),
    "integrator.edge_closure": ("ghost", "one_sided"),
    "integrator.stencil_form": ("amplitude", "log"),
    "integrator.g_refresh": ("stage", "step"),
}

_INTS = {"profile.N", "fan.n_rays", "integrator.n_steps", "output.record_every", "output.plot_rays",
         "oracle.n_points", "oracle.n_steps"}
_BOOLS = {"integrator.go_limit_mode", "integrator.enforce_constraint"}
_STRS = set(_CHOICES) | {"profile.samples", "output.dir"}


def flatten(tree: Mapping, prefix: str = "") -> dict:
    """Flatten nested tables into dotted keys."""
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, value):
    if isinstance(value, str) and value == AUTO and DEFAULTS[key] == AUTO:
        return AUTO
    if key in _BOOLS:
        if isinstance(value, bool):
            return value
        raise ConfigError(key, f"must be true or false, got {value!r}")
    if key in _INTS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
            raise ConfigError(key, f"must be an integer, got {value!r}")
        return int(value)
    if key in _STRS:
        if not isinstance(value, str):
            raise ConfigError(key, f"must be a string, got {value!r}")
        if key in _CHOICES and value not in _CHOICES[key]:
            raise ConfigError(key, f"must be one of {_CHOICES[key]}, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(key, f"must be a finite number, got {value!r}")
    return float(value)


def parse_value(key: str, text: str):
    """Parse a command-line override (TOML literal, falling back to a bare string)."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully resolved run configuration."""

    values: Mapping[str, Any]
    base_dir: Path = Path(".")

    # -- construction ------------------------------------------------------
    @classmethod
    def from_mapping(cls, raw: Mapping, base_dir: Path = Path(".")) -> "RunConfig":
        flat = flatten(raw)
        unknown = sorted(set(flat) - set(DEFAULTS))
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration key")
        merged = dict(DEFAULTS)
        for k, v in flat.items():
            merged[k] = _coerce(k, v)
        resolved = _resolve(dict(merged))
        resolved["_raw"] = {k: v for k, v in merged.items() if k in flat}
        return cls(resolved, Path(base_dir))

    @classmethod
    def from_file(cls, path, overrides: Optional[Mapping] = None) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"{path}: {exc}") from None
        flat = flatten(raw)
        flat.update(overrides or {})
        return cls.from_mapping(flat, path.parent)

    @classmethod
    def default(cls, **overrides) -> "RunConfig":
        return cls.from_mapping({k.replace("__", "."): v for k, v in overrides.items()})

    def with_overrides(self, overrides: Mapping) -> "RunConfig":
        """New config with some keys replaced; ``auto`` keys are re-resolved."""
        raw = dict(self.values["_raw"])
        raw.update(overrides)
        return RunConfig.from_mapping(raw, self.base_dir)

    def __getitem__(self, key):
        return self.values[key]

    def effective(self) -> dict:
        """The resolved key/value pairs (JSON serialisable)."""
        return {k: v for k, v in self.values.items() if not k.startswith("_")}

    # -- objects -------------------------------------------------------------
    def profile(self) -> LaunchProfile:
        v = self.values
        kind = v["profile.kind"]
        eps = v["profile.epsilon"]
        if kind == "gaussian":
            p = gaussian(eps)
        elif kind == "algebraic":
            p = algebraic(eps, v["profile.N"])
        elif kind == "two_beam":
            base = gaussian(eps) if v["profile.base"] == "gaussian" else algebraic(eps, v["profile.N"])
            p = two_beam(base, v["profile.xi0"])
        else:
            path = Path(v["profile.samples"])
            if not v["profile.samples"]:
                raise ConfigError("profile.samples", "custom_samples needs a samples file")
            if not path.is_absolute():
                path = self.base_dir / path
            try:
                data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            except (OSError, ValueError) as exc:
                raise ConfigError("profile.samples", f"cannot read {path}: {exc}") from None
            p = custom_samples(data[:, 0], data[:, 1], eps)
        return p.scaled(v["profile.scale"]) if v["profile.scale"] != 1.0 else p

    def medium(self) -> Medium:
        v = self.values
        kind = v["medium.kind"]
        if kind == "vacuum":
            return Medium.vacuum()
        return Medium.linear(kind, v["medium.value"], v["medium.slope_xi"], v["medium.slope_zeta"])

    def fan(self, profile: Optional[LaunchProfile] = None):
        v = self.values
        return sample_fan(profile or self.profile(), v["fan.n_rays"], v["fan.xi_min"], v["fan.xi_max"],
                          v["fan.amplitude_floor"])

    def integrator(self) -> IntegratorConfig:
        v = self.values
        ec = v["integrator.enforce_constraint"]
        return IntegratorConfig(
            d_tau=v["integrator.d_tau"], n_steps=v["integrator.n_steps"], scheme=v["integrator.scheme"],
            go_limit_mode=v["integrator.go_limit_mode"], enforce_constraint=ec,
            caustic_policy=v["integrator.caustic_policy"], coupling_scale=v["integrator.coupling_scale"],
            amplitude_model=v["integrator.amplitude_model"], edge_closure=v["integrator.edge_closure"],
            stencil_form=v["integrator.stencil_form"], g_refresh=v["integrator.g_refresh"],
            filter_rate=v["integrator.filter_rate"], max_dispersion_number=v["integrator.max_dispersion_number"],
            record_every=v["output.record_every"],
            amplitude_floor=v["fan.amplitude_floor"], zeta_max=v["integrator.zeta_max"],
        )

    def grid(self, profile: Optional[LaunchProfile] = None) -> GridSpec:
        v = self.values
        return GridSpec(half_width=v["oracle.half_width"], n_points=v["oracle.n_points"],
                        n_steps=v["oracle.n_steps"])


def _resolve(v: dict) -> dict:
    """Fill ``auto`` values and run cross-key validation."""
    eps = v["profile.epsilon"]
    if not (0 < eps <= 1):
        raise ConfigError("profile.epsilon", f"must lie in (0, 1], got {eps}")
    if v["profile.N"] < 1:
        raise ConfigError("profile.N", f"must be >= 1, got {v['profile.N']}")
    if v["profile.scale"] <= 0:
        raise ConfigError("profile.scale", "must be positive")
    if v["profile.xi0"] < 0:
        raise ConfigError("profile.xi0", "must be non-negative")
    if v["fan.n_rays"] < 5:
        raise ConfigError("fan.n_rays", f"must be >= 5, got {v['fan.n_rays']}")
    if v["integrator.d_tau"] <= 0:
        raise ConfigError("integrator.d_tau", "must be positive")
    if not (0 < v["output.prominence"] < 1):
        raise ConfigError("output.prominence", "must lie in (0, 1)")
    if v["output.record_every"] < 1:
        raise ConfigError("output.record_every", "must be >= 1")

    fe, mk = v["front_end"], v["medium.kind"]
    if mk == "refractive" and fe != "optical":
        raise ConfigError("medium.kind", "a refractive medium belongs to the optical front end")
    if mk == "potential" and fe != "quantum":
        raise ConfigError("medium.kind", "a potential belongs to the quantum front end")
    if mk == "refractive" and v["medium.value"] <= 0:
        raise ConfigError("medium.value", "n^2 must be positive")
    if mk == "potential" and v["medium.value"] >= 1:
        raise ConfigError("medium.value", "V/E must be below 1")
    if v["integrator.enforce_constraint"] is True and mk != "vacuum":
        raise ConfigError("integrator.enforce_constraint", "only valid for a vacuum medium")

    kind = v["profile.kind"]
    if kind == "gaussian":
        half = 3.0 / eps
    elif kind == "algebraic":
        half = 6.0 / eps
    elif kind == "two_beam":
        half = v["profile.xi0"] + (3.0 if v["profile.base"] == "gaussian" else 6.0) / eps
    else:
        half = None
    if v["fan.xi_min"] == AUTO and v["fan.xi_max"] == AUTO:
        if half is None:
            raise ConfigError("fan.xi_min", "custom_samples needs explicit fan.xi_min and fan.xi_max")
        v["fan.xi_min"], v["fan.xi_max"] = -half, half
    elif v["fan.xi_min"] == AUTO:
        v["fan.xi_min"] = -v["fan.xi_max"]
    elif v["fan.xi_max"] == AUTO:
        v["fan.xi_max"] = -v["fan.xi_min"]
    if not v["fan.xi_min"] < v["fan.xi_max"]:
        raise ConfigError("fan.xi_min", "must be below fan.xi_max")

    zr = rayleigh_range(eps)
    if v["output.detector_zeta"] == AUTO:
        v["output.detector_zeta"] = 2.0 * zr
    if v["integrator.zeta_max"] == AUTO:
        v["integrator.zeta_max"] = max(4.0 * zr, v["output.detector_zeta"])
    if v["integrator.zeta_max"] <= 0:
        raise ConfigError("integrator.zeta_max", "must be positive")
    if v["integrator.n_steps"] == AUTO:
        v["integrator.n_steps"] = n_steps_for(v["integrator.zeta_max"], v["integrator.d_tau"], 1.5)
    if v["integrator.n_steps"] < 1:
        raise ConfigError("integrator.n_steps", "must be >= 1")
    if v["integrator.enforce_constraint"] == AUTO:
        v["integrator.enforce_constraint"] = mk == "vacuum"
    if v["output.bin_width"] == AUTO:
        v["output.bin_width"] = 0.1 / eps
    if v["output.bin_width"] <= 0:
        raise ConfigError("output.bin_width", "must be positive")

    fan_half = max(abs(v["fan.xi_min"]), abs(v["fan.xi_max"]))
    if v["oracle.half_width"] == AUTO or v["oracle.n_points"] == AUTO:
        g = default_grid(_EpsOnly(eps), fan_half)
        if v["oracle.half_width"] == AUTO:
            v["oracle.half_width"] = g.half_width
        if v["oracle.n_points"] == AUTO:
            v["oracle.n_points"] = int(2 ** math.ceil(math.log2(2 * v["oracle.half_width"] * 32 * eps)))
    return v


class _EpsOnly:
    """Minimal stand-in for a profile when only epsilon is needed."""

    def __init__(self, eps):
        self.epsilon = eps
        self.default_half_width = 0.0


def defaults_text() -> str:
    """The default configuration as a commented TOML document."""
    lines = ["# wavetrace run configuration (flat dotted keys)"]
    for k, val in DEFAULTS.items():
        if isinstance(val, bool):
            lit = "true" if val else "false"
        elif isinstance(val, str):
            lit = f'"{val}"'
        else:
            lit = repr(val)
        lines.append(f"{k} = {lit}  # {_DOC[k]}")
    return "\n".join(lines) + "\n"
