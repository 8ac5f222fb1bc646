"""Wave potential ``G = (1/R) lap(R)`` on a ray fan, and its transverse gradient.

The fan is treated as a polyline wavefront.  Derivatives along it use
three-point Lagrange stencils in the arc coordinate ``s``, written in terms
of the segment lengths ``h_i = |x_{i+1} - x_i|``.  The stencils only use
differences and symmetric combinations, so a mirror-symmetric fan yields an
exactly mirror-symmetric ``G``.

Two amplitude models are available:

``"flux"`` (default)
    The wavefront amplitude at a ray is its launch amplitude diluted by the
    local ray-tube expansion, ``R_i / sqrt(ds/da)``, where ``a`` is the launch
    label.  This follows from conservation of the flux ``R^2 grad(phi)``
    between neighbouring rays, and it is what keeps the fan stable.
``"transported"``
    The launch amplitude is used as is (``R`` is constant along rays
    and evaluated directly against the current arc coordinate).  The
    resulting coupled system is ill-posed for spreading beams (short-wave
    perturbations grow without bound), so it is only useful for short runs
    and for studying that instability.

Two edge closures are available:

``"ghost"`` (default)
    Three ghost rays per side are continued from the four outermost rays by
    cubic extrapolation in the label index, with amplitudes taken from the
    launch profile at the ghost labels.  Every real ray then uses a centred
    stencil.
``"one_sided"``
    The edge rays reuse the three-point polynomial of their interior
    neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .beam_model import WavefrontFan
from .errors import CausticError, ConfigError

AMPLITUDE_MODELS = ("flux", "transported")
EDGE_CLOSURES = ("ghost", "one_sided")
STENCIL_FORMS = ("amplitude", "log")
N_GHOST = 3


@dataclass(frozen=True, eq=False)
class WavefrontParametrization:
    """Arc-length geometry of a fan.

    Attributes
    ----------
    arc_coordinate : ndarray, shape (n,)
        Cumulative polyline length from the first ray.
    segment_lengths : ndarray, shape (n-1,)
        Distances between consecutive rays.
    transverse_unit : ndarray, shape (n, 2)
        Unit vector perpendicular to each ray's momentum, ``(rho_z, -rho_x)/|rho|``.
    monotone : bool
        Whether consecutive rays advance along the transverse direction.
    crossings : ndarray
        Indices ``i`` for which rays ``i`` and ``i+1`` are out of order.
    """

    arc_coordinate: np.ndarray
    segment_lengths: np.ndarray
    transverse_unit: np.ndarray
    monotone: bool
    crossings: np.ndarray


# ---------------------------------------------------------------------------
# stencils


def lagrange_d1(h: np.ndarray, y: np.ndarray) -> np.ndarray:
    """First derivative of the three-point Lagrange polynomial at interior nodes.

    ``h`` are the node spacings (length ``m-1``), ``y`` the values (length
    ``m``); the result has length ``m-2`` and refers to nodes ``1..m-2``.
    """
    h0 = h[:-1]
    h1 = h[1:]
    D0 = (y[1:-1] - y[:-2]) / h0
    D1 = (y[2:] - y[1:-1]) / h1
    return (h0 * D1 + h1 * D0) / (h0 + h1)


def lagrange_d2(h: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Second derivative of the three-point Lagrange polynomial at interior nodes."""
    h0 = h[:-1]
    h1 = h[1:]
    D0 = (y[1:-1] - y[:-2]) / h0
    D1 = (y[2:] - y[1:-1]) / h1
    return 2.0 * (D1 - D0) / (h0 + h1)


def _edge_d1(h0, h1, y0, y1, y2):
    """Derivative at the first node of the three-point polynomial through nodes 0, 1, 2."""
    return (-(2 * h0 + h1) / (h0 * (h0 + h1)) * y0 + (h0 + h1) / (h0 * h1) * y1
            - h0 / (h1 * (h0 + h1)) * y2)


def _d1_one_sided(h: np.ndarray, y: np.ndarray) -> np.ndarray:
    """First derivative at every node; edges use the neighbouring interior polynomial."""
    out = np.empty_like(y)
    out[1:-1] = lagrange_d1(h, y)
    out[0] = _edge_d1(h[0], h[1], y[0], y[1], y[2])
    out[-1] = -_edge_d1(h[-1], h[-2], y[-1], y[-2], y[-3])
    return out


def _d2_one_sided(h: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.empty_like(y)
    out[1:-1] = lagrange_d2(h, y)
    out[0] = out[1]
    out[-1] = out[-2]
    return out


def extrapolation_weights(n_ghost: int = N_GHOST, degree: int = 3) -> np.ndarray:
    """Weights ``W[m-1, j]`` extrapolating to index ``-m`` from nodes ``0..degree``."""
    nodes = np.arange(degree + 1, dtype=float)
    W = np.empty((n_ghost, degree + 1))
    for m in range(1, n_ghost + 1):
        x = -float(m)
        for j in range(degree + 1):
            others = np.delete(nodes, j)
            W[m - 1, j] = np.prod(x - others) / np.prod(nodes[j] - others)
    return W


_W3 = extrapolation_weights(N_GHOST, 3)


def augment(v: np.ndarray, weights: np.ndarray = _W3) -> np.ndarray:
    """Append extrapolated ghost values on both sides (farthest ghost first on the left).

    ``v`` may be 1-D or a stack of rows; the continuation acts along the last axis.
    """
    v = np.asarray(v)
    d = weights.shape[1]
    # Both edge windows (the low one, and the high one read outwards-in) go
    # through the same batched product, so mirrored input gives exactly
    # mirrored ghosts.
    E = np.stack([v[..., :d], v[..., : -d - 1 : -1]])
    g = E @ weights.T
    return np.concatenate([g[0][..., ::-1], v, g[1]], axis=-1)


# ---------------------------------------------------------------------------
# core kernel


def transverse_units(rho_x, rho_z):
    n = np.hypot(rho_x, rho_z)
    return rho_z / n, -rho_x / n


def segment_lengths(xi, zeta) -> np.ndarray:
    return np.hypot(np.diff(xi), np.diff(zeta))


def _crossings(xi, zeta, tx, tz) -> np.ndarray:
    """Indices ``i`` where ray ``i+1`` does not lie ahead of ray ``i`` transversally."""
    dx = np.diff(xi)
    dz = np.diff(zeta)
    ax = tx[:-1] + tx[1:]
    az = tz[:-1] + tz[1:]
    return np.nonzero(~(dx * ax + dz * az > 0))[0]


def _ghost_labels(labels, n_ghost):
    n = labels.size
    da = (labels[-1] - labels[0]) / (n - 1)
    k = np.arange(n_ghost, 0, -1, dtype=float)
    lo = labels[0] - da * k
    hi = labels[-1] + da * k[::-1]
    return np.concatenate([lo, labels, hi])


def _G_from_amplitude(h, amp, form):
    """``R''/R`` at interior nodes of ``amp`` using spacings ``h``."""
    if form == "log":
        L = np.log(amp)
        return lagrange_d2(h, L) + lagrange_d1(h, L) ** 2
    return lagrange_d2(h, amp) / amp[1:-1]


class PotentialKernel:
    """Wave-potential evaluator for a fixed set of labels and amplitudes.

    Everything that does not change while the fan moves (ghost labels,
    label spacings, padded amplitudes, the amplitude-floor mask) is prepared
    once; calling the object with ray states returns ``(G, dG/ds)``.
    See :func:`potential_kernel` for the parameters.
    """

    def __init__(self, labels, amplitude, ghost_amplitude=None, amplitude_model: str = "flux",
                 edge_closure: str = "ghost", stencil_form: str = "amplitude",
                 amplitude_floor: float = 0.0):
        if amplitude_model not in AMPLITUDE_MODELS:
            raise ConfigError("integrator.amplitude_model", f"must be one of {AMPLITUDE_MODELS}")
        if edge_closure not in EDGE_CLOSURES:
            raise ConfigError("integrator.edge_closure", f"must be one of {EDGE_CLOSURES}")
        if stencil_form not in STENCIL_FORMS:
            raise ConfigError("integrator.stencil_form", f"must be one of {STENCIL_FORMS}")
        labels = np.asarray(labels, dtype=float)
        amplitude = np.asarray(amplitude, dtype=float)
        self.amplitude_model = amplitude_model
        self.edge_closure = edge_closure
        self.stencil_form = stencil_form
        self.labels = labels
        self.amplitude = amplitude
        if edge_closure == "ghost":
            if ghost_amplitude is None:
                raise ConfigError("fan", "ghost edge closure needs ghost amplitudes")
            k = N_GHOST
            lo, hi = ghost_amplitude
            self.amp = np.concatenate([np.asarray(lo, dtype=float)[:k][::-1], amplitude,
                                       np.asarray(hi, dtype=float)[:k]])
            dlab = np.diff(_ghost_labels(labels, k))
            self.a0, self.a1 = dlab[:-1], dlab[1:]
            self.a01 = self.a0 + self.a1
            self.amp_mid = self.amp[1:-1]
        else:
            self.dlab = np.diff(labels)
        self.low = None
        if amplitude_floor > 0:
            low = amplitude < amplitude_floor * np.max(amplitude)
            if np.any(low):
                self.low = low

    def __call__(self, xi, zeta, rho_x=None, rho_z=None):
        return self.from_positions(np.stack([xi, zeta]))

    def from_positions(self, P):
        """``(G, dG/ds)`` for ray positions ``P = [xi, zeta]`` of shape ``(2, n)``."""
        if self.edge_closure == "ghost":
            A = augment(P)
            D = A[:, 1:] - A[:, :-1]
            h = np.hypot(D[0], D[1])
            if self.amplitude_model == "flux":
                J = (self.a0 * (h[1:] / self.a1) + self.a1 * (h[:-1] / self.a0)) / self.a01  # nodes 1..m-2
                eff = self.amp_mid / np.sqrt(J)
                G = _G_from_amplitude(h[1:-1], eff, self.stencil_form)  # nodes 2..m-3
                dG = lagrange_d1(h[2:-2], G)                           # nodes 3..m-4 == real rays
                G_real = G[1:-1]
            else:
                G = _G_from_amplitude(h, self.amp, self.stencil_form)  # nodes 1..m-2
                G_real = G[2:-2]
                dG = lagrange_d1(h[2:-2], G[1:-1])
        else:
            h = segment_lengths(P[0], P[1])
            amp = self.amplitude
            if self.amplitude_model == "flux":
                J = _d1_one_sided(self.dlab, np.concatenate([[0.0], np.cumsum(h)]))
                amp = amp / np.sqrt(J)
            if self.stencil_form == "log":
                L = np.log(amp)
                G = _d2_one_sided(h, L) + _d1_one_sided(h, L) ** 2
            else:
                G = _d2_one_sided(h, amp) / amp
            G_real = G
            dG = _d1_one_sided(h, G)
        if self.low is not None:
            G_real = np.where(self.low, 0.0, G_real)
            dG = np.where(self.low, 0.0, dG)
        return G_real, dG


def potential_kernel(xi, zeta, rho_x, rho_z, labels, amplitude, ghost_amplitude=None,
                     amplitude_model: str = "flux", edge_closure: str = "ghost",
                     stencil_form: str = "amplitude", amplitude_floor: float = 0.0):
    """Compute ``G`` and ``dG/ds`` for a fan given as plain arrays.

    Parameters
    ----------
    xi, zeta, rho_x, rho_z : ndarray
        Ray states in wavefront order.  The momenta are not needed by the
        three-point stencils (they work on chord lengths) and are accepted
        for a uniform call signature.
    labels : ndarray
        Launch labels (any strictly monotone coordinate along the fan).
    amplitude : ndarray
        Relative launch amplitudes.
    ghost_amplitude : tuple of ndarray, optional
        Amplitudes beyond the low and high edges (nearest first); required
        for ``edge_closure="ghost"``.
    amplitude_model : {"flux", "transported"}
        ``flux`` rescales the launch amplitude by ``1/sqrt(ds/da)`` so that
        the flux between neighbouring rays is conserved; ``transported``
        uses the launch amplitude unchanged.
    edge_closure : {"ghost", "one_sided"}
    stencil_form : {"amplitude", "log"}
    amplitude_floor : float
        Rays launched below this fraction of the peak amplitude get zero force.

    Returns
    -------
    G, dGds : ndarray
        Wave potential and its derivative along the wavefront, per ray.
    """
    kernel = PotentialKernel(labels, amplitude, ghost_amplitude, amplitude_model, edge_closure,
                             stencil_form, amplitude_floor)
    return kernel(xi, zeta, rho_x, rho_z)


# ---------------------------------------------------------------------------
# fan-level operations


def parametrize(fan: WavefrontFan, check: bool = True) -> WavefrontParametrization:
    """Arc-length parametrisation of ``fan``.

    Raises
    ------
    CausticError
        If ``check`` is true and neighbouring rays have crossed.
    """
    tx, tz = transverse_units(fan.rho_x, fan.rho_z)
    h = segment_lengths(fan.xi, fan.zeta)
    bad = _crossings(fan.xi, fan.zeta, tx, tz)
    if check and bad.size:
        raise CausticError(fan.step_index, bad)
    s = np.concatenate([[0.0], np.cumsum(h)])
    return WavefrontParametrization(s, h, np.stack([tx, tz], axis=1), bad.size == 0, bad)


def _kernel_for(fan, amplitude_model, edge_closure, stencil_form, amplitude_floor):
    return potential_kernel(fan.xi, fan.zeta, fan.rho_x, fan.rho_z, fan.launch_label,
                            fan.relative_amplitude, fan.ghost_amplitude, amplitude_model,
                            edge_closure, stencil_form, amplitude_floor)


def second_derivative_on_fan(fan: WavefrontFan, param: Optional[WavefrontParametrization] = None,
                             amplitude_model: str = "flux", edge_closure: str = "ghost",
                             stencil_form: str = "amplitude",
                             amplitude_floor: float = 0.0) -> np.ndarray:
    """Per-ray wave potential ``G = R''/R`` along the wavefront.

    ``param`` is accepted for symmetry with :func:`wave_potential_gradient`;
    the geometry is recomputed from the fan (and checked for crossings when
    ``param`` is not given).
    """
    if param is None:
        parametrize(fan)
    G, _ = _kernel_for(fan, amplitude_model, edge_closure, stencil_form, amplitude_floor)
    return G


def wave_potential_gradient(fan: WavefrontFan, param: Optional[WavefrontParametrization] = None,
                            G_values: Optional[np.ndarray] = None,
                            amplitude_model: str = "flux", edge_closure: str = "ghost",
                            stencil_form: str = "amplitude",
                            amplitude_floor: float = 0.0) -> np.ndarray:
    """Per-ray gradient ``(dG/ds) * t`` with ``t`` the unit vector perpendicular to ``rho``.

    If ``G_values`` is supplied (e.g. from :func:`second_derivative_on_fan`
    with custom settings), ``dG/ds`` is taken from them with the interior
    three-point stencil; otherwise both are computed together.

    Returns
    -------
    ndarray, shape (n, 2)
        ``(dG/dxi, dG/dzeta)`` per ray.  By construction it is orthogonal to
        the ray momentum.
    """
    if param is None:
        param = parametrize(fan)
    if G_values is None:
        _, dG = _kernel_for(fan, amplitude_model, edge_closure, stencil_form, amplitude_floor)
    else:
        dG = _d1_one_sided(param.segment_lengths, np.asarray(G_values, dtype=float))
    return dG[:, None] * param.transverse_unit
