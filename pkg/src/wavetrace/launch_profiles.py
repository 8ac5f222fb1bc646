"""Launch-plane amplitude profiles and the initial ray fan.

All profiles are real, non-negative transverse amplitude distributions
``R(xi)`` at ``zeta = 0`` with a flat launch phase, so every ray starts
parallel to the axis with ``rho = (0, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .beam_model import WavefrontFan
from .errors import ConfigError

PROFILE_KINDS = ("gaussian", "algebraic", "two_beam", "custom_samples")

#: Rays are only launched where R exceeds this fraction of the peak amplitude.
AMPLITUDE_FLOOR = 1e-8
#: Number of ghost labels continued beyond each fan edge.
N_GHOST = 3


def _check_epsilon(epsilon) -> float:
    try:
        eps = float(epsilon)
    except (TypeError, ValueError):
        raise ConfigError("profile.epsilon", f"must be a number, got {epsilon!r}") from None
    if not (0.0 < eps <= 1.0) or not math.isfinite(eps):
        raise ConfigError("profile.epsilon", f"must lie in (0, 1], got {epsilon!r}")
    return eps


@dataclass(frozen=True)
class LaunchProfile:
    """Transverse launch amplitude ``R(xi) = scale * shape(xi)``.

    Attributes
    ----------
    kind : str
        One of ``gaussian``, ``algebraic``, ``two_beam``, ``custom_samples``.
    epsilon : float
        Ratio ``lambda0 / w0``; sets the transverse scale ``1/epsilon``.
    N : int or None
        Order of the algebraic profile.
    offset_xi0 : float or None
        Half separation of a two-beam profile.
    shape_fn, shape_second_derivative_fn : callable
        Un-normalised amplitude and its analytic second derivative.
    scale : float
        Overall normalisation.  The dynamics never depend on it.
    base : LaunchProfile or None
        Single-beam profile of a two-beam launch.
    """

    kind: str
    epsilon: float
    shape_fn: Callable
    shape_second_derivative_fn: Optional[Callable] = None
    N: Optional[int] = None
    offset_xi0: Optional[float] = None
    scale: float = 1.0
    base: Optional["LaunchProfile"] = None

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ConfigError("profile.kind", f"must be one of {PROFILE_KINDS}, got {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ConfigError("profile.scale", f"must be a positive number, got {self.scale!r}")

    def shape(self, xi) -> np.ndarray:
        return np.asarray(self.shape_fn(np.asarray(xi, dtype=float)), dtype=float)

    def amplitude_fn(self, xi) -> np.ndarray:
        """Launch amplitude ``R(xi)``."""
        return self.scale * self.shape(xi)

    def second_derivative_fn(self, xi) -> np.ndarray:
        """Analytic ``d^2 R / d xi^2``."""
        if self.shape_second_derivative_fn is None:
            raise NotImplementedError(f"{self.kind} profile has no analytic second derivative")
        return self.scale * np.asarray(self.shape_second_derivative_fn(np.asarray(xi, dtype=float)))

    def launch_G(self, xi) -> np.ndarray:
        """Analytic launch-plane wave potential ``R''/R``."""
        xi = np.asarray(xi, dtype=float)
        return np.asarray(self.shape_second_derivative_fn(xi)) / self.shape(xi)

    def summary(self) -> dict:
        """Plain-dict description (for configs and reports)."""
        return {"kind": self.kind, "epsilon": self.epsilon, "N": self.N,
                "xi0": self.offset_xi0, "scale": self.scale,
                "base": None if self.base is None else self.base.kind}

    def scaled(self, factor: float) -> "LaunchProfile":
        """The same profile with its normalisation multiplied by ``factor``."""
        return replace(self, scale=self.scale * factor)

    @property
    def peak_shape(self) -> float:
        """Largest value of the un-normalised shape (used by the amplitude floor)."""
        if self.kind == "two_beam":
            xs = np.linspace(-self.offset_xi0 - 1 / self.epsilon, self.offset_xi0 + 1 / self.epsilon, 2001)
            return float(max(self.shape(xs).max(), self.shape(np.array([0.0, self.offset_xi0])).max()))
        if self.kind == "custom_samples":
            return float(self._samples[1].max())
        return float(self.shape(np.array([0.0]))[0])

    @property
    def default_half_width(self) -> float:
        """Default fan half-width in units of lambda0."""
        if self.kind == "gaussian":
            return 3.0 / self.epsilon
        if self.kind == "algebraic":
            return 6.0 / self.epsilon
        if self.kind == "two_beam":
            return self.offset_xi0 + self.base.default_half_width
        xs = self._samples[0]
        return float(min(-xs[0], xs[-1]))

    @property
    def _samples(self):
        return getattr(self.shape_fn, "samples")


def gaussian(epsilon: float) -> LaunchProfile:
    """Gaussian launch profile ``exp(-epsilon^2 xi^2)``.

    Examples
    --------
    >>> p = gaussian(0.25)
    >>> float(p.amplitude_fn(4.0))  # doctest: +ELLIPSIS
    0.3678...
    """
    eps = _check_epsilon(epsilon)
    e2 = eps * eps

    def shape(xi):
        return np.exp(-e2 * xi * xi)

    def d2(xi):
        return (4 * e2 * e2 * xi * xi - 2 * e2) * np.exp(-e2 * xi * xi)

    return LaunchProfile("gaussian", eps, shape, d2)


def algebraic(epsilon: float, N: int) -> LaunchProfile:
    """Flat-topped algebraic profile ``1 / (1 + (epsilon xi)^(2N))``.

    Larger ``N`` gives a wider flat central region and steeper edges.
    """
    eps = _check_epsilon(epsilon)
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 1:
        if isinstance(N, float) and N.is_integer() and N >= 1:
            N = int(N)
        else:
            raise ConfigError("profile.N", f"must be an integer >= 1, got {N!r}")
    N = int(N)
    m = 2 * N

    # Powers are taken of |t| (with the sign restored for odd powers): numpy's
    # integer power of a negative base is not always the exact mirror image of
    # the positive one, and that would break the fan's mirror symmetry.
    def shape(xi):
        return 1.0 / (1.0 + np.abs(eps * xi) ** m)

    def d2(xi):
        t = eps * xi
        a = np.abs(t)
        u = a**m
        du = m * eps * np.sign(t) * a ** (m - 1)
        ddu = m * (m - 1) * eps * eps * a ** (m - 2)
        q = 1.0 + u
        return -ddu / q**2 + 2.0 * du * du / q**3

    return LaunchProfile("algebraic", eps, shape, d2, N=N)


def two_beam(base: LaunchProfile, xi0: float) -> LaunchProfile:
    """Two parallel copies of ``base`` centred at ``+xi0`` and ``-xi0``."""
    if base.kind not in ("gaussian", "algebraic"):
        raise ConfigError("profile.base", f"two_beam needs a gaussian or algebraic base, got {base.kind!r}")
    xi0 = float(xi0)
    if not (xi0 >= 0 and math.isfinite(xi0)):
        raise ConfigError("profile.xi0", f"must be a non-negative number, got {xi0!r}")
    f, f2 = base.shape_fn, base.shape_second_derivative_fn

    def shape(xi):
        return f(xi - xi0) + f(xi + xi0)

    def d2(xi):
        return f2(xi - xi0) + f2(xi + xi0)

    return LaunchProfile("two_beam", base.epsilon, shape, d2, N=base.N, offset_xi0=xi0,
                         scale=base.scale, base=base)


def custom_samples(xi, R, epsilon: float) -> LaunchProfile:
    """Profile interpolated from tabulated samples by a natural cubic spline."""
    from scipy.interpolate import CubicSpline

    eps = _check_epsilon(epsilon)
    xi = np.asarray(xi, dtype=float)
    R = np.asarray(R, dtype=float)
    if xi.ndim != 1 or xi.shape != R.shape or xi.size < 5:
        raise ConfigError("profile.samples", "need at least 5 (xi, R) samples of equal length")
    if np.any(np.diff(xi) <= 0) or np.any(R < 0) or not np.all(np.isfinite(R)):
        raise ConfigError("profile.samples", "xi must increase strictly and R must be finite and >= 0")
    spline = CubicSpline(xi, R, bc_type="natural", extrapolate=True)
    d2spline = spline.derivative(2)

    def shape(x):
        return spline(x)

    shape.samples = (xi, R)
    return LaunchProfile("custom_samples", eps, shape, lambda x: d2spline(x))


def flat_top_width(profile: LaunchProfile, level: float = 0.99) -> float:
    """Half-width of the region where ``R / R(0) > level`` (found by bisection)."""
    from scipy.optimize import brentq

    r0 = float(profile.shape(np.array([0.0]))[0])
    g = lambda x: float(profile.shape(np.array([x]))[0]) / r0 - level
    hi = 1.0 / profile.epsilon
    while g(hi) > 0:
        hi *= 2
    return brentq(g, 0.0, hi, xtol=1e-14)


def symmetric_labels(n_rays: int, xi_min: float, xi_max: float) -> np.ndarray:
    """Equally spaced labels; mirror-exact when ``xi_min == -xi_max``."""
    i = np.arange(n_rays, dtype=float)
    t = (2.0 * i - (n_rays - 1)) / (n_rays - 1)
    mid = 0.5 * (xi_min + xi_max)
    half = 0.5 * (xi_max - xi_min)
    return mid + half * t


def sample_fan(profile: LaunchProfile, n_rays: int, xi_min: float, xi_max: float,
               amplitude_floor: float = AMPLITUDE_FLOOR, n_ghost: int = N_GHOST) -> WavefrontFan:
    """Launch fan of ``n_rays`` equally spaced rays on ``[xi_min, xi_max]``.

    Every ray starts at ``zeta = 0`` with ``rho = (0, 1)`` and carries the
    profile amplitude at its label.

    Raises
    ------
    ConfigError
        If the fan is too small, the interval is empty, or the profile at an
        edge falls below ``amplitude_floor`` times the peak amplitude.
    """
    if isinstance(n_rays, bool) or int(n_rays) != n_rays or n_rays < 5:
        raise ConfigError("fan.n_rays", f"must be an integer >= 5, got {n_rays!r}")
    n_rays = int(n_rays)
    xi_min, xi_max = float(xi_min), float(xi_max)
    if not (xi_min < xi_max):
        raise ConfigError("fan.xi_min", f"xi_min ({xi_min}) must be below xi_max ({xi_max})")
    peak = profile.peak_shape
    floor = amplitude_floor * peak
    for key, edge in (("fan.xi_min", xi_min), ("fan.xi_max", xi_max)):
        r = float(profile.shape(np.array([edge]))[0])
        if not r > floor:
            raise ConfigError(key, f"amplitude at xi={edge:g} is {r:.3g}, below the floor {floor:.3g}")
    labels = symmetric_labels(n_rays, xi_min, xi_max)
    amp = profile.shape(labels)
    da = (xi_max - xi_min) / (n_rays - 1)
    k = np.arange(1, n_ghost + 1, dtype=float)
    ghost_lo = np.maximum(profile.shape(xi_min - da * k), floor)
    ghost_hi = np.maximum(profile.shape(xi_max + da * k), floor)
    zeros = np.zeros(n_rays)
    return WavefrontFan(
        xi=labels, zeta=zeros, rho_x=zeros, rho_z=np.ones(n_rays), launch_label=labels,
        relative_amplitude=amp, amplitude_scale=profile.scale,
        ghost_amplitude=(ghost_lo, ghost_hi),
    )


def default_fan(profile: LaunchProfile, n_rays: int = 201) -> WavefrontFan:
    """Fan with the default symmetric extent for the profile kind."""
    h = profile.default_half_width
    return sample_fan(profile, n_rays, -h, h)
