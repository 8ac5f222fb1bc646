"""Independent reference solutions and the fringe diagnostics.

* :func:`gaussian_envelope` — analytic half-width of a paraxial Gaussian beam.
* :func:`paraxial_grid_propagate` — split-step (angular spectrum) solution of
  the paraxial wave equation ``i dA/dzeta = -(1/4 pi) d^2A/dxi^2`` in
  the same dimensionless units as the ray system.
* :func:`oracle_ray_positions` — where the rays of a fan *should* be
  according to the wave solution.  Flux between two rays is conserved, so
  the ray with launch label ``a`` sits where the cumulative normalised
  intensity equals its launch value: ``xi(a) = F_zeta^{-1}(F_0(a))``.
* :func:`detect_fringes` — ray-density histogram at a detector plane and
  its off-axis maxima.

Prominence of an off-axis peak is measured towards the axis: the peak
height minus the lowest histogram value between the peak and ``xi = 0``.
A density that is flat across the beam core therefore has no prominent
off-axis peaks.  Only genuine gatherings (a depleted zone between a local
concentration of rays and the axis) count as fringes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks, peak_prominences

from .beam_model import TrajectoryBundle
from .errors import DomainError, OracleResolutionError
from .launch_profiles import LaunchProfile

#: Relative prominence above which an off-axis density maximum is a fringe.
PROMINENCE_THRESHOLD = 0.2
#: Minimum number of histogram bins.
MIN_BINS = 50


# ---------------------------------------------------------------------------
# analytic Gaussian beam


def gaussian_envelope(epsilon: float, zeta):
    """Half-width ``w(zeta)/lambda0`` of a Gaussian beam with ``w0 = lambda0/epsilon``.

    >>> round(float(gaussian_envelope(0.25, 0.0)), 12)
    4.0
    """
    zeta = np.asarray(zeta, dtype=float)
    zr = math.pi / epsilon**2
    return (1.0 / epsilon) * np.sqrt(1.0 + (zeta / zr) ** 2)


def rayleigh_range(epsilon: float) -> float:
    """Dimensionless Rayleigh range ``pi / epsilon^2``."""
    return math.pi / epsilon**2


# ---------------------------------------------------------------------------
# paraxial grid propagation


@dataclass(frozen=True)
class GridSpec:
    """Transverse grid and stepping of the paraxial oracle.

    Attributes
    ----------
    half_width : float
        The grid spans ``[-half_width, half_width)``.
    n_points : int
        Number of grid points (a power of two is fastest).
    n_steps : int
        Number of propagation steps up to ``zeta_max``.
    absorber_fraction : float
        Fraction of the domain on each side covered by the absorbing margin.
    band_edge_fraction : float
        Spectral content above this fraction of the Nyquist wavenumber is
        counted as band-edge energy.
    alias_tolerance : float
        Maximum allowed band-edge energy fraction.
    """

    half_width: float
    n_points: int
    n_steps: int = 64
    absorber_fraction: float = 0.125
    band_edge_fraction: float = 0.8
    alias_tolerance: float = 1e-6

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_points

    def grid(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n_points)


def default_grid(profile: LaunchProfile, fan_half_width: Optional[float] = None,
                 samples_per_w0: int = 32) -> GridSpec:
    """Grid at least 4x wider than the fan, sampling ``w0`` ``samples_per_w0`` times."""
    fan_half = fan_half_width if fan_half_width is not None else profile.default_half_width
    half = max(64.0 / profile.epsilon, 4.0 * fan_half)
    n = 2 ** int(math.ceil(math.log2(2 * half * samples_per_w0 * profile.epsilon)))
    return GridSpec(half_width=half, n_points=n)


@dataclass(frozen=True, eq=False)
class IntensityField:
    """``|psi|^2`` on the grid at the recorded ``zeta`` planes."""

    xi: np.ndarray
    zeta: np.ndarray
    intensity: np.ndarray
    power: np.ndarray
    grid: GridSpec

    def at(self, zeta: float) -> np.ndarray:
        """Intensity at the recorded plane nearest ``zeta``."""
        return self.intensity[self.index(zeta)]

    def index(self, zeta: float) -> int:
        i = int(np.argmin(np.abs(self.zeta - zeta)))
        if not math.isclose(self.zeta[i], zeta, rel_tol=1e-9, abs_tol=1e-9):
            raise DomainError(f"zeta={zeta} was not recorded (nearest {self.zeta[i]})")
        return i


def _band_edge_fraction(spectrum: np.ndarray, k: np.ndarray, kcut: float) -> float:
    p = np.abs(spectrum) ** 2
    tot = p.sum()
    return float(p[np.abs(k) > kcut].sum() / tot) if tot > 0 else 0.0


def paraxial_grid_propagate(profile: LaunchProfile, zeta_max: float, grid_spec: Optional[GridSpec] = None,
                            record_zetas: Optional[Sequence[float]] = None,
                            initial_field: Optional[Callable] = None) -> IntensityField:
    """Propagate ``R(xi) exp(i*0)`` with the split-step angular-spectrum method.

    Each step multiplies the spectrum by ``exp(-i k^2 dzeta / 4 pi)`` (exact
    for free space) and then applies an absorbing mask in the outer margins.

    Parameters
    ----------
    profile : LaunchProfile
    zeta_max : float
    grid_spec : GridSpec, optional
        Defaults to :func:`default_grid`.
    record_zetas : sequence of float, optional
        Planes to record in addition to ``0`` and ``zeta_max``.
    initial_field : callable, optional
        Replaces the profile amplitude (used for plane-wave tests).

    Raises
    ------
    OracleResolutionError
        If the grid under-resolves ``w0`` or the spectrum reaches the band edge.
    """
    g = grid_spec or default_grid(profile)
    if g.dx > (1.0 / profile.epsilon) / 8.0:
        raise OracleResolutionError(f"grid spacing {g.dx:g} gives fewer than 8 samples per w0")
    x = g.grid()
    k = 2.0 * math.pi * np.fft.fftfreq(g.n_points, g.dx)
    kcut = g.band_edge_fraction * math.pi / g.dx
    psi = (initial_field(x) if initial_field is not None else profile.amplitude_fn(x)).astype(complex)

    frac = _band_edge_fraction(np.fft.fft(psi), k, kcut)
    if frac > g.alias_tolerance:
        raise OracleResolutionError(f"launch spectrum has {frac:.2e} of its energy at the band edge")

    # absorbing margins: cos^2 taper to zero over the outer band
    margin = g.absorber_fraction * 2 * g.half_width
    inner = g.half_width - margin
    d = np.clip((np.abs(x) - inner) / margin, 0.0, 1.0)
    mask = np.cos(0.5 * math.pi * d) ** 2

    base = np.linspace(0.0, zeta_max, g.n_steps + 1)
    targets = set() if record_zetas is None else {float(z) for z in np.atleast_1d(record_zetas)}
    breaks = np.unique(np.concatenate([base, [z for z in targets if 0 <= z <= zeta_max]]))
    dz_nominal = zeta_max / g.n_steps if zeta_max > 0 else 1.0
    record = {0.0, float(zeta_max)} | targets

    zs, Is, Ps = [], [], []

    def keep(z, psi):
        if any(math.isclose(z, t, rel_tol=1e-12, abs_tol=1e-12) for t in record):
            zs.append(z)
            Is.append(np.abs(psi) ** 2)
            Ps.append(float(np.sum(np.abs(psi) ** 2) * g.dx))

    keep(0.0, psi)
    for z0, z1 in zip(breaks[:-1], breaks[1:]):
        dz = z1 - z0
        spectrum = np.fft.fft(psi)
        p_before = np.sum(np.abs(psi) ** 2)
        psi = np.fft.ifft(spectrum * np.exp(-1j * k * k * dz / (4.0 * math.pi)))
        p_after = np.sum(np.abs(psi) ** 2)
        if abs(p_after - p_before) > 1e-6 * p_before:
            raise OracleResolutionError("propagator failed to conserve power")
        psi = psi * mask ** (dz / dz_nominal)
        keep(float(z1), psi)
    frac = _band_edge_fraction(np.fft.fft(psi), k, kcut)
    if frac > g.alias_tolerance:
        raise OracleResolutionError(f"propagated spectrum has {frac:.2e} of its energy at the band edge")
    return IntensityField(x, np.array(zs), np.array(Is), np.array(Ps), g)


def _cumulative(x, I, dx):
    """Normalised cumulative intensity evaluated at the right cell faces."""
    F = np.cumsum(I)
    F = F / F[-1]
    return x + 0.5 * dx, F


def binned_power(field: IntensityField, zeta: float, edges: np.ndarray) -> np.ndarray:
    """Power of the oracle field inside each bin (piecewise-linear cumulative integral)."""
    dx = field.grid.dx
    I = field.at(zeta)
    xf = np.concatenate([[field.xi[0] - 0.5 * dx], field.xi + 0.5 * dx])
    F = np.concatenate([[0.0], np.cumsum(I) * dx])
    return np.diff(np.interp(edges, xf, F))


def oracle_ray_positions(field: IntensityField, labels, zeta: float) -> np.ndarray:
    """Transverse positions of the flux-conserving rays with launch labels ``labels``."""
    dx = field.grid.dx
    xf, F0 = _cumulative(field.xi, field.intensity[0], dx)
    _, F = _cumulative(field.xi, field.at(zeta), dx)
    q = np.interp(np.asarray(labels, dtype=float), xf, F0)
    # F is non-decreasing; make it strictly increasing for inversion
    F = np.maximum.accumulate(F + 1e-300 * np.arange(F.size))
    return np.interp(q, F, xf)


# ---------------------------------------------------------------------------
# fringe detection


@dataclass(frozen=True, eq=False)
class FringeReport:
    """Ray-density statistics at a detector plane."""

    detector_zeta: float
    bin_edges: np.ndarray
    ray_density_histogram: np.ndarray
    peak_positions: list
    peak_prominences: list
    is_fringed: bool
    bin_width: float
    prominence_threshold: float = PROMINENCE_THRESHOLD
    source: str = "trajectories"

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def off_axis_peaks(self) -> list:
        return [p for p in self.peak_positions if abs(p) > 0.5 * self.bin_width]

    def to_dict(self, with_histogram: bool = True) -> dict:
        out = {
            "source": self.source,
            "detector_zeta": float(self.detector_zeta),
            "bin_width": float(self.bin_width),
            "prominence_threshold": float(self.prominence_threshold),
            "is_fringed": bool(self.is_fringed),
            "peak_positions": [float(p) for p in self.peak_positions],
            "peak_prominences": [float(p) for p in self.peak_prominences],
        }
        if with_histogram:
            out["bin_edges"] = [float(e) for e in self.bin_edges]
            out["ray_density_histogram"] = [float(c) for c in self.ray_density_histogram]
        return out


def histogram_edges(bin_width: float, extent: float, min_bins: int = MIN_BINS) -> np.ndarray:
    """Bin edges centred on ``xi = 0`` covering ``[-extent, extent]``."""
    K = max(int(math.ceil(extent / bin_width - 0.5)) + 1, (min_bins + 1) // 2)
    return (np.arange(-K, K + 2) - 0.5) * bin_width


def interval_density(positions: np.ndarray, edges: np.ndarray,
                     weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Histogram of a ray fan treated as a continuous line density.

    Each interval between consecutive rays carries one unit (or
    ``weights[i]``) spread uniformly between the two ray positions.  This
    avoids the aliasing of counting discrete rays into bins of comparable size.
    """
    p = np.asarray(positions, dtype=float)
    lo = np.minimum(p[:-1], p[1:])[:, None]
    hi = np.maximum(p[:-1], p[1:])[:, None]
    w = np.ones(p.size - 1) if weights is None else np.asarray(weights, dtype=float)
    e0 = edges[None, :-1]
    e1 = edges[None, 1:]
    length = hi - lo
    overlap = np.clip(np.minimum(e1, hi) - np.maximum(e0, lo), 0.0, None)
    point = length[:, 0] <= 0
    frac = np.divide(overlap, length, out=np.zeros_like(overlap), where=length > 0)
    if np.any(point):
        inside = (e0 <= lo) & (lo < e1)
        frac[point] = inside[point]
    return (w[:, None] * frac).sum(axis=0)


def find_fringe_peaks(centers: np.ndarray, values: np.ndarray, bin_width: float,
                      threshold: float = PROMINENCE_THRESHOLD):
    """Local maxima of ``values`` with axis-directed prominence ``>= threshold * max``.

    Returns
    -------
    positions, prominences : list of float
        Sorted by ``|xi|``.
    """
    v = np.asarray(values, dtype=float)
    vmax = float(v.max()) if v.size else 0.0
    if vmax <= 0:
        return [], []
    padded = np.concatenate([[-np.inf], v, [-np.inf]])
    idx, _ = find_peaks(padded)
    idx = idx - 1
    axis = int(np.argmin(np.abs(centers)))
    out = []
    for j in idx:
        if abs(centers[j]) <= 0.5 * bin_width:
            prom = float(peak_prominences(np.concatenate([[0.0], v, [0.0]]), [j + 1])[0][0])
        else:
            lo, hi = (axis, j) if j > axis else (j, axis)
            prom = float(v[j] - v[lo:hi + 1].min())
        if prom >= threshold * vmax:
            out.append((float(centers[j]), prom))
    out.sort(key=lambda t: (abs(t[0]), t[0]))
    return [p for p, _ in out], [q for _, q in out]


def fringe_report_from_positions(positions, detector_zeta: float, bin_width: float,
                                 threshold: float = PROMINENCE_THRESHOLD,
                                 extent: Optional[float] = None, source: str = "trajectories") -> FringeReport:
    """Fringe report for a fan whose rays sit at ``positions`` (in label order)."""
    positions = np.asarray(positions, dtype=float)
    ext = extent if extent is not None else float(np.max(np.abs(positions)))
    edges = histogram_edges(bin_width, ext)
    hist = interval_density(positions, edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    peaks, proms = find_fringe_peaks(centers, hist, bin_width, threshold)
    fringed = any(abs(p) > 0.5 * bin_width for p in peaks)
    return FringeReport(float(detector_zeta), edges, hist, peaks, proms, fringed, float(bin_width),
                        float(threshold), source)


def positions_at_planes(bundle: TrajectoryBundle, planes) -> np.ndarray:
    """Interpolate every trajectory's ``xi`` at the given ``zeta`` planes.

    Interpolation is cubic Hermite in ``tau`` using the recorded momenta as
    exact derivatives (``dxi/dtau = rho_x``, ``dzeta/dtau = rho_z``), so its
    error is fourth order in the record spacing and does not mask the
    integrator's own convergence.

    Returns an array of shape ``(len(planes), n_rays)``.

    Raises
    ------
    DomainError
        If a plane lies beyond the simulated range of some ray.
    """
    planes = np.atleast_1d(np.asarray(planes, dtype=float))
    reach = float(np.min(bundle.zeta[-1]))
    if np.any(planes > reach + 1e-12) or np.any(planes < 0):
        raise DomainError(f"detector plane beyond simulated range (rays reach zeta={reach:.6g})")
    nrec = bundle.tau.size
    out = np.empty((planes.size, bundle.n_rays))
    if nrec == 1:
        out[:] = bundle.xi[0]
        return out
    for i in range(bundle.n_rays):
        z = bundle.zeta[:, i]
        k = np.clip(np.searchsorted(z, planes, side="right") - 1, 0, nrec - 2)
        h = bundle.tau[k + 1] - bundle.tau[k]
        z0, z1 = z[k], z[k + 1]
        dz0, dz1 = h * bundle.rho_z[k, i], h * bundle.rho_z[k + 1, i]
        x0, x1 = bundle.xi[k, i], bundle.xi[k + 1, i]
        dx0, dx1 = h * bundle.rho_x[k, i], h * bundle.rho_x[k + 1, i]
        dzs = z1 - z0
        s = np.where(dzs > 0, (planes - z0) / np.where(dzs > 0, dzs, 1.0), 0.0)
        for _ in range(8):
            f = _hermite(s, z0, z1, dz0, dz1) - planes
            df = _hermite_d(s, z0, z1, dz0, dz1)
            s = np.clip(s - f / np.where(df > 0, df, 1.0), 0.0, 1.0)
        out[:, i] = _hermite(s, x0, x1, dx0, dx1)
    return out


def _hermite(s, y0, y1, d0, d1):
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * d1)


def _hermite_d(s, y0, y1, d0, d1):
    s2 = s * s
    return (6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * d0 + (-6 * s2 + 6 * s) * y1 + (3 * s2 - 2 * s) * d1


def bundle_epsilon(bundle: TrajectoryBundle) -> float:
    try:
        return float(bundle.config["profile"]["epsilon"])
    except (KeyError, TypeError):
        raise DomainError("bundle config lacks profile.epsilon; pass bin_width explicitly") from None


def detect_fringes(bundle: TrajectoryBundle, detector_zeta: float, bin_width: Optional[float] = None,
                   threshold: float = PROMINENCE_THRESHOLD) -> FringeReport:
    """Fringe report of a simulated bundle at ``zeta = detector_zeta``.

    ``bin_width`` defaults to ``w0/10 = 0.1/epsilon``.
    """
    bw = bin_width if bin_width is not None else 0.1 / bundle_epsilon(bundle)
    pos = positions_at_planes(bundle, [detector_zeta])[0]
    return fringe_report_from_positions(pos, detector_zeta, bw, threshold)


def gathering_scan(position_rows, planes, bin_width: float, threshold: float = PROMINENCE_THRESHOLD):
    """First plane whose ray density shows an off-axis fringe, or ``None``."""
    for z, row in zip(planes, position_rows):
        if fringe_report_from_positions(row, z, bin_width, threshold).is_fringed:
            return float(z)
    return None


def scan_planes(zeta_max: float, spacing: float) -> np.ndarray:
    n = int(math.floor(zeta_max / spacing + 1e-9))
    return spacing * np.arange(1, n + 1)


def first_gathering_zeta(bundle: TrajectoryBundle, bin_width: Optional[float] = None,
                         threshold: float = PROMINENCE_THRESHOLD,
                         spacing: Optional[float] = None) -> Optional[float]:
    """Smallest scanned ``zeta`` at which the trajectory density is fringed.

    Planes are spaced by ``spacing`` (default: one hundredth of the Rayleigh
    range) up to the reach of the shortest trajectory.
    """
    eps = bundle_epsilon(bundle)
    bw = bin_width if bin_width is not None else 0.1 / eps
    sp = spacing if spacing is not None else rayleigh_range(eps) / 100.0
    planes = scan_planes(float(np.min(bundle.zeta[-1])), sp)
    return gathering_scan(positions_at_planes(bundle, planes), planes, bw, threshold)


def oracle_first_gathering_zeta(profile: LaunchProfile, labels, zeta_max: float,
                                grid_spec: Optional[GridSpec] = None, bin_width: Optional[float] = None,
                                threshold: float = PROMINENCE_THRESHOLD,
                                spacing: Optional[float] = None) -> Optional[float]:
    """Oracle counterpart of :func:`first_gathering_zeta`."""
    eps = profile.epsilon
    bw = bin_width if bin_width is not None else 0.1 / eps
    sp = spacing if spacing is not None else rayleigh_range(eps) / 100.0
    planes = scan_planes(zeta_max, sp)
    fld = paraxial_grid_propagate(profile, zeta_max, grid_spec, record_zetas=planes)
    rows = [oracle_ray_positions(fld, labels, z) for z in planes]
    return gathering_scan(rows, planes, bw, threshold)


def intensity_fringe_report(field: IntensityField, zeta: float, bin_width: float,
                            threshold: float = PROMINENCE_THRESHOLD,
                            extent: Optional[float] = None) -> FringeReport:
    """Fringe report of the oracle intensity itself, averaged into detector bins."""
    ext = extent if extent is not None else field.grid.half_width * (1 - 2 * field.grid.absorber_fraction)
    edges = histogram_edges(bin_width, ext)
    vals = binned_power(field, zeta, edges) / bin_width
    centers = 0.5 * (edges[1:] + edges[:-1])
    peaks, proms = find_fringe_peaks(centers, vals, bin_width, threshold)
    return FringeReport(float(zeta), edges, vals, peaks, proms,
                        any(abs(p) > 0.5 * bin_width for p in peaks), float(bin_width),
                        float(threshold), "oracle_intensity")


@dataclass
class PeakMatch:
    """Pairing of two peak lists within a tolerance."""

    simulated: list
    reference: list
    deltas: list = field(default_factory=list)
    unmatched_simulated: list = field(default_factory=list)
    unmatched_reference: list = field(default_factory=list)
    tolerance: float = 0.0

    @property
    def ok(self) -> bool:
        return (not self.unmatched_simulated and not self.unmatched_reference
                and len(self.simulated) == len(self.reference))

    def to_dict(self) -> dict:
        return {
            "simulated_peaks": self.simulated, "reference_peaks": self.reference,
            "deltas": self.deltas, "unmatched_simulated": self.unmatched_simulated,
            "unmatched_reference": self.unmatched_reference, "tolerance": self.tolerance,
            "ok": self.ok,
        }


def match_peaks(simulated: Sequence[float], reference: Sequence[float], tolerance: float) -> PeakMatch:
    """Match every reference peak to the nearest simulated one (and vice versa).

    Peak positions are bin centres, so a one-bin offset equals ``tolerance``
    up to rounding; a relative slack of 1e-9 absorbs that rounding.
    """
    sim = [float(s) for s in simulated]
    ref = [float(r) for r in reference]
    m = PeakMatch(sim, ref, tolerance=float(tolerance))
    tolerance = float(tolerance) * (1.0 + 1e-9)
    for r in ref:
        d = min((abs(s - r) for s in sim), default=math.inf)
        m.deltas.append(d)
        if d > tolerance:
            m.unmatched_reference.append(r)
    for s in sim:
        d = min((abs(s - r) for r in ref), default=math.inf)
        if d > tolerance:
            m.unmatched_simulated.append(s)
    return m


def flux_correspondence(positions, amplitudes, field: IntensityField, zeta: float, bin_width: float,
                        core_level: float = 0.5) -> dict:
    """Compare the ``R^2``-weighted ray histogram with the oracle intensity per bin.

    Both are normalised to unit total; bins where the oracle fraction is at
    least ``core_level`` times its maximum form the beam core.
    """
    positions = np.asarray(positions, dtype=float)
    R2 = np.asarray(amplitudes, dtype=float) ** 2
    edges = histogram_edges(bin_width, float(np.max(np.abs(positions))))
    w = 0.5 * (R2[:-1] + R2[1:])
    sim = interval_density(positions, edges, w)
    sim = sim / sim.sum()
    ref = binned_power(field, zeta, edges)
    ref = ref / ref.sum()
    core = ref >= core_level * ref.max()
    rel = np.abs(sim[core] - ref[core]) / ref[core]
    centers = 0.5 * (edges[1:] + edges[:-1])
    return {
        "bin_centers": [float(c) for c in centers[core]],
        "simulated_fraction": [float(v) for v in sim[core]],
        "oracle_fraction": [float(v) for v in ref[core]],
        "relative_error": [float(v) for v in rel],
        "max_relative_error": float(rel.max()) if rel.size else 0.0,
    }


def envelope_tracking_error(bundle: TrajectoryBundle, epsilon: float, zeta_max: float,
                            n_planes: int = 1001) -> float:
    """Max relative deviation of the ray launched at ``1/epsilon`` from the Gaussian envelope.

    The deviation is sampled on ``n_planes`` equally spaced planes over
    ``[0, zeta_max]``.  When ``1/epsilon`` is not itself a launch label, the
    ray is interpolated linearly in launch label between its two neighbours.
    """
    a = 1.0 / epsilon
    lab = bundle.launch_label
    j = int(np.searchsorted(lab, a))
    if j >= lab.size or (j == 0 and lab[0] != a):
        raise DomainError("fan does not contain the label 1/epsilon")
    planes = np.linspace(0.0, zeta_max, n_planes)
    pos = positions_at_planes(bundle, planes)
    if lab[j] == a:
        xi = pos[:, j]
    else:
        t = (a - lab[j - 1]) / (lab[j] - lab[j - 1])
        xi = (1 - t) * pos[:, j - 1] + t * pos[:, j]
    w = gaussian_envelope(epsilon, planes)
    return float(np.max(np.abs(xi - w) / w))


# ---------------------------------------------------------------------------
# finite differences


def finite_difference_gradient_check(field_fn: Callable, points, h: float,
                                     gradient_fn: Optional[Callable] = None, order: int = 1) -> float:
    """Worst absolute difference between an analytic derivative and central differences.

    Parameters
    ----------
    field_fn : callable
        ``f(xi)`` for 1-D points or ``f(xi, zeta)`` for 2-D points.
    points : array_like
        Shape ``(m,)`` (1-D) or ``(m, 2)`` (2-D).
    h : float
        Difference step.
    gradient_fn : callable
        Analytic first derivative (``order=1``; returns a pair for 2-D) or
        second derivative (``order=2``, 1-D only).
    order : {1, 2}
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if gradient_fn is None:
        raise ValueError("gradient_fn is required")
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        if order == 1:
            fd = (field_fn(pts + h) - field_fn(pts - h)) / (2 * h)
        elif order == 2:
            fd = (field_fn(pts + h) - 2 * field_fn(pts) + field_fn(pts - h)) / (h * h)
        else:
            raise ValueError("order must be 1 or 2")
        return float(np.max(np.abs(np.asarray(gradient_fn(pts)) - fd)))
    if order != 1:
        raise ValueError("2-D checks support first derivatives only")
    x, z = pts[:, 0], pts[:, 1]
    gx, gz = gradient_fn(x, z)
    fx = (field_fn(x + h, z) - field_fn(x - h, z)) / (2 * h)
    fz = (field_fn(x, z + h) - field_fn(x, z - h)) / (2 * h)
    return float(max(np.max(np.abs(np.asarray(gx) - fx)), np.max(np.abs(np.asarray(gz) - fz))))
