"""Command-line interface.

Subcommands
-----------
``run CONFIG``
    Simulate one configuration; writes ``trajectories.csv``, ``summary.json``
    and ``pattern.svg`` to ``output.dir``.
``reproduce FIG``
    Regenerate a reference figure at ``epsilon = 0.25``: 1 launch profiles,
    2-3 launch-plane wave potential (N=1, N=2), 4-6 trajectory patterns
    (Gaussian, N=1, N=2).
``oracle-compare CONFIG``
    Simulate and compare against the paraxial grid oracle; writes
    ``comparison.json`` and ``oracle_intensity.csv``.
``sweep CONFIG PARAM VALUE...``
    One run per value of ``epsilon``, ``N``, ``xi0``, ``d_tau`` or ``n_rays``.
``defaults``
    Print every configuration key with its default.

Exit codes: 0 success, 1 acceptance-threshold failure, 2 configuration error,
3 simulation halted (partial artifacts written), 4 oracle could not resolve
the configuration.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, outputs
from .config import RunConfig, defaults_text, parse_value
from .errors import ConfigError, DomainError, OracleResolutionError, SimulationHalted
from .integrator import run as integrate
from .launch_profiles import algebraic, gaussian
from .oracles import (detect_fringes, envelope_tracking_error, first_gathering_zeta, flux_correspondence,
                      fringe_report_from_positions, intensity_fringe_report, match_peaks,
                      oracle_ray_positions, paraxial_grid_propagate, positions_at_planes, rayleigh_range)

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_HALT, EXIT_ORACLE = 0, 1, 2, 3, 4

#: Acceptance thresholds applied by ``oracle-compare``.
ENVELOPE_TOLERANCE = 0.02
FLUX_TOLERANCE = 0.10

SWEEP_KEYS = {
    "epsilon": "profile.epsilon",
    "N": "profile.N",
    "xi0": "profile.xi0",
    "d_tau": "integrator.d_tau",
    "n_rays": "fan.n_rays",
}


# ---------------------------------------------------------------------------
# simulation helpers


def simulate(cfg: RunConfig):
    """Run the configured simulation; returns ``(bundle, error_or_None)``."""
    profile = cfg.profile()
    try:
        return integrate(profile, cfg.medium(), cfg.integrator(), fan=cfg.fan(profile)), None
    except SimulationHalted as exc:
        return exc.partial, exc


def _error_block(error) -> Optional[dict]:
    if error is None:
        return None
    block = {"type": type(error).__name__, "message": str(error)}
    if getattr(error, "step_index", None) is not None:
        block["step_index"] = error.step_index
    if getattr(error, "ray_indices", None) is not None:
        block["ray_indices"] = list(error.ray_indices)
    elif getattr(error, "ray_index", None) is not None:
        block["ray_indices"] = [error.ray_index]
    return block


def _detector_report(cfg: RunConfig, bundle):
    try:
        return detect_fringes(bundle, cfg["output.detector_zeta"], cfg["output.bin_width"],
                              cfg["output.prominence"])
    except DomainError:
        return None


def build_summary(cfg: RunConfig, bundle, error, command: str, artifacts: Sequence[str]) -> dict:
    """Summary document for a (possibly partial) run."""
    d = bundle.diagnostics
    report = _detector_report(cfg, bundle)
    gathering = first_gathering_zeta(bundle, cfg["output.bin_width"], cfg["output.prominence"])
    return {
        "schema_version": 1,
        "command": command,
        "status": d["status"],
        "config": cfg.effective(),
        "runtime": {
            "wall_time_s": float(d["wall_time"]),
            "steps_completed": int(d["steps_completed"]),
            "records": int(bundle.tau.size),
            "n_rays": int(bundle.n_rays),
            "reached_zeta_max": d["reached_zeta_max"],
            "zeta_reached": float(np.min(bundle.zeta[-1])),
        },
        "invariants": {
            "momentum_drift_max": float(d["momentum_drift_max"]),
            "constraint_correction_max": float(d["constraint_correction_max"]),
            "constraint_enforced": bool(d["constraint_enforced"]),
            "monotone": bool(np.all(d["monotone"])),
            "sorted_steps": [int(s) for s in d["sorted_steps"]],
            "low_confidence_rays": [int(i) for i in d["low_confidence_rays"]],
            "filter_alpha": float(d["filter_alpha"]),
        },
        "fringe_report": None if report is None else report.to_dict(),
        "first_gathering_zeta": gathering,
        "error": _error_block(error),
        "artifacts": list(artifacts),
    }


def write_run_artifacts(cfg: RunConfig, bundle, error, out_dir: Path, command: str = "run",
                        title: str = "") -> dict:
    """Write trajectories.csv, pattern.svg and summary.json; returns the summary."""
    out_dir = Path(out_dir)
    names = ["trajectories.csv", "summary.json", "pattern.svg"]
    outputs.write_trajectories(out_dir / "trajectories.csv", bundle)
    outputs.pattern_svg(out_dir / "pattern.svg", bundle, title=title, max_rays=cfg["output.plot_rays"],
                        detector_zeta=cfg["output.detector_zeta"])
    summary = build_summary(cfg, bundle, error, command, names)
    outputs.validate_summary(summary)
    outputs.write_json(out_dir / "summary.json", summary)
    return summary


def _out_dir(cfg: RunConfig, override: Optional[str]) -> Path:
    if override:
        return Path(override)
    p = Path(cfg["output.dir"])
    return p if p.is_absolute() else cfg.base_dir / p


def _title(cfg: RunConfig) -> str:
    kind = cfg["profile.kind"]
    extra = f", N={cfg['profile.N']}" if kind == "algebraic" else ""
    return f"{kind}{extra}, eps={cfg['profile.epsilon']:g}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(cfg: RunConfig, out: Optional[str] = None, command: str = "run") -> int:
    bundle, error = simulate(cfg)
    out_dir = _out_dir(cfg, out)
    summary = write_run_artifacts(cfg, bundle, error, out_dir, command, _title(cfg))
    if error is not None:
        print(f"halted: {error}", file=sys.stderr)
        print(f"partial artifacts in {out_dir}", file=sys.stderr)
        return EXIT_HALT
    rep = summary["fringe_report"]
    fr = "n/a (detector not reached)" if rep is None else rep["is_fringed"]
    print(f"{out_dir}: {summary['runtime']['steps_completed']} steps, "
          f"drift {summary['invariants']['momentum_drift_max']:.3g}, fringed: {fr}")
    return EXIT_OK


def _profile_curves(eps: float):
    profs = {"R0 (gaussian)": gaussian(eps), "R1 (N=1)": algebraic(eps, 1), "R2 (N=2)": algebraic(eps, 2)}
    return profs


def cmd_reproduce(figure: int, base: RunConfig, out: Optional[str]) -> int:
    eps = base["profile.epsilon"]
    out_dir = Path(out) if out else _out_dir(base, None) / f"figure{figure}"
    x = np.linspace(-8.0 / eps, 8.0 / eps, 1601)
    profs = _profile_curves(eps)
    if figure == 1:
        curves = {k: p.amplitude_fn(x) for k, p in profs.items()}
        outputs.curves_csv(out_dir / "profiles.csv", x, curves)
        outputs.curves_svg(out_dir / "profiles.svg", x, curves, r"$\xi$  [$\lambda_0$]", "R",
                           f"launch amplitude profiles, eps={eps:g}")
        print(f"{out_dir}/profiles.svg")
        return EXIT_OK
    if figure in (2, 3):
        keys = ["R0 (gaussian)", "R1 (N=1)" if figure == 2 else "R2 (N=2)"]
        curves = {k.replace("R", "G", 1): profs[k].launch_G(x) for k in keys}
        outputs.curves_csv(out_dir / "launch_G.csv", x, curves)
        outputs.curves_svg(out_dir / "launch_G.svg", x, curves, r"$\xi$  [$\lambda_0$]", "G = R''/R",
                           f"launch-plane wave potential, eps={eps:g}")
        print(f"{out_dir}/launch_G.svg")
        return EXIT_OK
    kind = {4: ("gaussian", 1), 5: ("algebraic", 1), 6: ("algebraic", 2)}[figure]
    cfg = base.with_overrides({"profile.kind": kind[0], "profile.N": kind[1], "fan.xi_min": "auto",
                               "fan.xi_max": "auto", "integrator.zeta_max": 2 * rayleigh_range(eps)})
    return cmd_run(cfg, str(out_dir), command="reproduce")


def compare(cfg: RunConfig) -> tuple[dict, list]:
    """Simulator-versus-oracle comparison; returns ``(report, failed_checks)``."""
    profile = cfg.profile()
    bundle, error = simulate(cfg)
    det, bw, thr = cfg["output.detector_zeta"], cfg["output.bin_width"], cfg["output.prominence"]
    eps = cfg["profile.epsilon"]
    field = paraxial_grid_propagate(profile, det, cfg.grid(profile), record_zetas=[0.0, det])
    checks, failed = {}, []

    def check(_name, _ok, **data):
        checks[_name] = {**data, "passed": bool(_ok)}
        if not _ok:
            failed.append(_name)

    check("simulation_completed", error is None, status=bundle.diagnostics["status"],
          error=_error_block(error))
    report = {"config": cfg.effective(), "detector_zeta": det, "bin_width": bw, "checks": checks}
    try:
        sim_pos = positions_at_planes(bundle, [det])[0]
    except DomainError as exc:
        check("detector_reached", False, message=str(exc))
        return report, failed

    if cfg["profile.kind"] == "gaussian" and cfg["medium.kind"] == "vacuum":
        try:
            err = envelope_tracking_error(bundle, eps, det)
            check("envelope_error", err <= ENVELOPE_TOLERANCE, value=err, tolerance=ENVELOPE_TOLERANCE)
        except DomainError as exc:
            check("envelope_error", False, message=str(exc))

    sim_rep = fringe_report_from_positions(sim_pos, det, bw, thr)
    ora_pos = oracle_ray_positions(field, bundle.launch_label, det)
    ora_rep = fringe_report_from_positions(ora_pos, det, bw, thr, source="oracle_ray_density")
    match = match_peaks(sim_rep.off_axis_peaks, ora_rep.off_axis_peaks, bw)
    check("fringe_positions", match.ok and sim_rep.is_fringed == ora_rep.is_fringed,
          simulated_fringed=sim_rep.is_fringed, oracle_fringed=ora_rep.is_fringed,
          **{k: v for k, v in match.to_dict().items() if k != "ok"})
    flux = flux_correspondence(sim_pos, bundle.amplitude_R, field, det, bw)
    check("flux_correspondence", flux["max_relative_error"] <= FLUX_TOLERANCE,
          value=flux["max_relative_error"], tolerance=FLUX_TOLERANCE)
    report.update({
        "simulated_fringes": sim_rep.to_dict(with_histogram=False),
        "oracle_fringes": ora_rep.to_dict(with_histogram=False),
        "oracle_intensity_fringes": intensity_fringe_report(field, det, bw, thr).to_dict(with_histogram=False),
        "oracle_ray_positions_delta_max": float(np.max(np.abs(sim_pos - ora_pos))),
        "flux_table": flux,
        "oracle_grid": {"half_width": field.grid.half_width, "n_points": field.grid.n_points,
                        "n_steps": field.grid.n_steps, "power_drift": float(abs(field.power[-1] / field.power[0] - 1))},
    })
    report["_field"] = field
    report["_extent"] = 2 * max(abs(cfg["fan.xi_min"]), abs(cfg["fan.xi_max"]))
    return report, failed


def cmd_oracle_compare(cfg: RunConfig, out: Optional[str]) -> int:
    out_dir = _out_dir(cfg, out)
    report, failed = compare(cfg)
    field = report.pop("_field", None)
    extent = report.pop("_extent", None)
    report["failed"] = failed
    report["passed"] = not failed
    if field is not None:
        outputs.write_oracle_intensity(out_dir / "oracle_intensity.csv", field, xi_extent=extent)
    outputs.write_json(out_dir / "comparison.json", report)
    for name, c in report["checks"].items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}")
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


def _sweep_one(values: dict):
    """Single sweep point (top level so it can run in a worker process)."""
    cfg = RunConfig.from_mapping(values)
    bundle, error = simulate(cfg)
    rep = _detector_report(cfg, bundle)
    try:
        det = positions_at_planes(bundle, [cfg["output.detector_zeta"]])[0]
    except DomainError:
        det = None
    return {
        "status": bundle.diagnostics["status"],
        "error": _error_block(error),
        "zeta_reached": float(np.min(bundle.zeta[-1])),
        "first_gathering_zeta": first_gathering_zeta(bundle, cfg["output.bin_width"], cfg["output.prominence"]),
        "is_fringed": None if rep is None else rep.is_fringed,
        "peak_positions": None if rep is None else rep.peak_positions,
        "launch_label": bundle.launch_label,
        "detector_xi": det,
    }


def cauchy_differences(runs: list) -> list:
    """Max detector-xi difference between consecutive sweep points, on shared labels."""
    diffs = []
    for a, b in zip(runs, runs[1:]):
        if a["detector_xi"] is None or b["detector_xi"] is None:
            diffs.append(None)
            continue
        la, lb = np.asarray(a["launch_label"]), np.asarray(b["launch_label"])
        ia = np.nonzero(np.isclose(la[:, None], lb[None, :], rtol=0, atol=1e-9))
        if ia[0].size == 0:
            diffs.append(None)
            continue
        xa = np.asarray(a["detector_xi"])[ia[0]]
        xb = np.asarray(b["detector_xi"])[ia[1]]
        diffs.append(float(np.max(np.abs(xa - xb))))
    return diffs


def cmd_sweep(cfg: RunConfig, parameter: str, raw_values: Sequence[str], out: Optional[str],
              jobs: int = 1) -> int:
    if parameter not in SWEEP_KEYS:
        raise ConfigError("sweep.parameter", f"must be one of {sorted(SWEEP_KEYS)}, got {parameter!r}")
    key = SWEEP_KEYS[parameter]
    values = [parse_value(key, v) for v in raw_values]
    if not values:
        raise ConfigError("sweep.values", "at least one value is required")
    configs = [cfg.with_overrides({key: v}) for v in values]  # validates every point up front
    points = [c.effective() for c in configs]
    control = None
    if parameter == "N":
        control = cfg.with_overrides({"profile.kind": "gaussian", "fan.xi_min": "auto", "fan.xi_max": "auto"})
        points.append(control.effective())
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, points))
    else:
        results = [_sweep_one(p) for p in points]
    runs = results[: len(values)]
    diffs = cauchy_differences(runs) if parameter in ("d_tau", "n_rays") else None
    ratios = None
    if diffs is not None:
        ratios = [None if (p is None or q is None or q == 0) else p / q for p, q in zip(diffs, diffs[1:])]
    doc = {
        "parameter": parameter,
        "key": key,
        "values": values,
        "base_config": cfg.effective(),
        "runs": [{k: v for k, v in r.items() if k not in ("launch_label", "detector_xi")} | {"value": val}
                 for r, val in zip(runs, values)],
    }
    if control is not None:
        c = results[-1]
        doc["gaussian_control"] = {k: v for k, v in c.items() if k not in ("launch_label", "detector_xi")}
    if diffs is not None:
        doc["cauchy_differences"] = diffs
        doc["cauchy_ratios"] = ratios
    out_dir = _out_dir(cfg, out)
    outputs.write_json(out_dir / "sweep.json", doc)
    xs = [float(v) for v, r in zip(values, runs) if r["first_gathering_zeta"] is not None]
    ys = [r["first_gathering_zeta"] for r in runs if r["first_gathering_zeta"] is not None]
    outputs.curves_svg(out_dir / "sweep.svg", {"first gathering": xs}, {"first gathering": ys},
                       parameter, r"first-gathering $\zeta$  [$\lambda_0$]",
                       f"sweep of {parameter}", marker="o")
    for val, r in zip(values, runs):
        print(f"{parameter}={val}: status={r['status']} first_gathering_zeta={r['first_gathering_zeta']} "
              f"fringed={r['is_fringed']}")
    if diffs is not None:
        print(f"cauchy differences: {diffs}; ratios: {ratios}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _overrides(pairs: Sequence[str]) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError("--set", f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_value(k.strip(), v.strip())
    return out


def _load(path: Optional[str], sets) -> RunConfig:
    overrides = _overrides(sets)
    if path is None:
        return RunConfig.from_mapping(overrides)
    return RunConfig.from_file(path, overrides)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavetrace", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("config", help="TOML configuration file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a configuration key")
        sp.add_argument("--out", help="output directory (default: output.dir)")

    common(sub.add_parser("run", help="simulate one configuration"))
    rp = sub.add_parser("reproduce", help="regenerate a reference figure (1 profiles, 2-3 launch G, 4-6 patterns)")
    rp.add_argument("figure", type=int, choices=range(1, 7))
    rp.add_argument("--config", help="optional base configuration")
    common(rp, config_required=False)
    common(sub.add_parser("oracle-compare", help="compare a run with the paraxial grid oracle"))
    sp = sub.add_parser("sweep", help="one run per parameter value")
    common(sp)
    sp.add_argument("parameter", choices=sorted(SWEEP_KEYS))
    sp.add_argument("values", nargs="+")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sub.add_parser("defaults", help="print the default configuration")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "defaults":
            sys.stdout.write(defaults_text())
            return EXIT_OK
        if args.command == "reproduce":
            return cmd_reproduce(args.figure, _load(args.config, args.set), args.out)
        cfg = _load(args.config, args.set)
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "oracle-compare":
            return cmd_oracle_compare(cfg, args.out)
        return cmd_sweep(cfg, args.parameter, args.values, args.out, args.jobs)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleResolutionError as exc:
        print(f"oracle resolution error: {exc}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
