"""Artifact writers.  Every file is written to a temporary name and renamed.

trajectories.csv
    One row per (ray, recorded step), sorted by ``ray_id`` then ``step``::

        ray_id,step,tau,xi,zeta,rho_x,rho_z,R,G

    ``ray_id`` counts from 0 at the lowest launch label.  Floats are written
    with 17 significant digits, so the file round-trips exactly and identical
    runs give byte-identical files.

oracle_intensity.csv
    Oracle intensity ``|psi|^2`` on the grid::

        zeta,xi,intensity

summary.json
    Run summary; validates against :data:`SUMMARY_SCHEMA`
    (also shipped as ``summary.schema.json``).

pattern.svg
    Trajectory pattern on the (xi, zeta) plane, ``zeta`` horizontal, both
    axes in units of ``lambda0``.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

TRAJECTORY_COLUMNS = ("ray_id", "step", "tau", "xi", "zeta", "rho_x", "rho_z", "R", "G")

SUMMARY_SCHEMA = json.loads(resources.files("wavetrace").joinpath("summary.schema.json").read_text())


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write ``data`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def write_json(path, payload) -> Path:
    return atomic_write_text(path, json.dumps(_to_jsonable(payload), indent=2, sort_keys=False) + "\n")


def trajectories_csv(bundle) -> str:
    """CSV text of a :class:`TrajectoryBundle` (see module docstring)."""
    nrec, n = bundle.xi.shape
    R = np.broadcast_to(np.asarray(bundle.amplitude_R, dtype=float), (nrec, n))
    G = bundle.G if bundle.G is not None else np.full((nrec, n), np.nan)
    table = np.column_stack([
        np.repeat(np.arange(n), nrec),
        np.tile(bundle.steps, n),
        np.tile(bundle.tau, n),
        *(np.asarray(a).T.ravel() for a in (bundle.xi, bundle.zeta, bundle.rho_x, bundle.rho_z, R, G)),
    ])
    buf = io.StringIO()
    np.savetxt(buf, table, fmt=["%d", "%d"] + ["%.17g"] * 7, delimiter=",",
               header=",".join(TRAJECTORY_COLUMNS), comments="")
    return buf.getvalue()


def write_trajectories(path, bundle) -> Path:
    return atomic_write_text(path, trajectories_csv(bundle))


def read_trajectories(path) -> dict:
    """Columns of a trajectories.csv as arrays (for tests and post-processing)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {c: data[:, j] for j, c in enumerate(TRAJECTORY_COLUMNS)}


def write_oracle_intensity(path, field, zetas: Optional[Iterable[float]] = None,
                           xi_extent: Optional[float] = None) -> Path:
    """Oracle intensity at the selected planes, cropped to ``|xi| <= xi_extent``."""
    idx = range(field.zeta.size) if zetas is None else [field.index(z) for z in zetas]
    keep = np.ones(field.xi.size, bool) if xi_extent is None else np.abs(field.xi) <= xi_extent
    buf = io.StringIO()
    buf.write("zeta,xi,intensity\n")
    for i in idx:
        z = repr(float(field.zeta[i]))
        for x, v in zip(field.xi[keep], field.intensity[i][keep]):
            buf.write(f"{z},{float(x)!r},{float(v)!r}\n")
    return atomic_write_text(path, buf.getvalue())


def validate_summary(payload) -> None:
    """Raise ``jsonschema.ValidationError`` if ``payload`` breaks the schema."""
    import jsonschema

    jsonschema.validate(_to_jsonable(payload), SUMMARY_SCHEMA)


# ---------------------------------------------------------------------------
# SVG


def _figure():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "wavetrace"
    plt.rcParams["svg.fonttype"] = "path"
    return plt


def _save_svg(fig, path) -> Path:
    plt = _figure()
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return atomic_write_bytes(path, buf.getvalue())


def pattern_svg(path, bundle, title: str = "", max_rays: int = 81,
                detector_zeta: Optional[float] = None) -> Path:
    """Plot the trajectories on the (xi, zeta) plane with ``zeta`` horizontal."""
    plt = _figure()
    n = bundle.n_rays
    sel = np.unique(np.round(np.linspace(0, n - 1, min(n, max_rays))).astype(int))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i in sel:
        ax.plot(bundle.zeta[:, i], bundle.xi[:, i], lw=0.5, color="k")
    if detector_zeta is not None and detector_zeta <= float(np.max(bundle.zeta)):
        ax.axvline(detector_zeta, color="tab:red", lw=0.8, ls="--", label="detector")
        ax.legend(loc="upper left", frameon=False)
    ax.set_xlabel(r"$\zeta$  [$\lambda_0$]")
    ax.set_ylabel(r"$\xi$  [$\lambda_0$]")
    ax.set_title(title)
    ax.set_xlim(0, float(np.max(bundle.zeta)))
    fig.tight_layout()
    return _save_svg(fig, path)


def curves_svg(path, x, curves: dict, xlabel: str, ylabel: str, title: str = "",
               ylim=None, marker=None) -> Path:
    """Generic line plot, one labelled curve per entry of ``curves``."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for label, y in curves.items():
        xs = x[label] if isinstance(x, dict) else x
        ax.plot(xs, y, label=label, marker=marker)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if ylim is not None:
        ax.set_ylim(*ylim)
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save_svg(fig, path)


def curves_csv(path, x, curves: dict, xname: str = "xi") -> Path:
    buf = io.StringIO()
    buf.write(",".join([xname, *curves]) + "\n")
    for j in range(len(x)):
        buf.write(",".join(repr(float(v)) for v in [x[j], *(c[j] for c in curves.values())]) + "\n")
    return atomic_write_text(path, buf.getvalue())
