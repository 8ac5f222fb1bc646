import json

import numpy as np
import pytest

from wavetrace.cli import (EXIT_CONFIG, EXIT_HALT, EXIT_OK, EXIT_ORACLE, EXIT_THRESHOLD, cauchy_differences,
                           main)
from wavetrace.outputs import TRAJECTORY_COLUMNS, read_trajectories, validate_summary


def write_config(tmp_path, text="", name="run.toml"):
    path = tmp_path / name
    path.write_text(f'output.dir = "{tmp_path / "out"}"\n' + text)
    return str(path)


SHORT = 'fan.n_rays = 51\nintegrator.zeta_max = 20.0\n'


def test_defaults_command(capsys):
    assert main(["defaults"]) == EXIT_OK
    out = capsys.readouterr().out
    assert 'profile.kind = "gaussian"' in out
    assert "integrator.d_tau = 0.1" in out


class TestRun:
    def test_writes_artifacts(self, tmp_path):
        cfg = write_config(tmp_path, SHORT)
        assert main(["run", cfg]) == EXIT_OK
        out = tmp_path / "out"
        assert sorted(p.name for p in out.iterdir()) == ["pattern.svg", "summary.json", "trajectories.csv"]
        summary = json.loads((out / "summary.json").read_text())
        validate_summary(summary)
        assert summary["status"] == "complete"
        assert summary["error"] is None
        assert summary["fringe_report"] is None  # detector beyond zeta_max
        assert summary["config"]["fan.n_rays"] == 51
        data = read_trajectories(out / "trajectories.csv")
        assert set(data) == set(TRAJECTORY_COLUMNS)
        n_rec = summary["runtime"]["records"]
        assert data["ray_id"].size == 51 * n_rec
        assert np.all(np.diff(data["ray_id"]) >= 0)
        assert (out / "trajectories.csv").read_text().splitlines()[0] == ",".join(TRAJECTORY_COLUMNS)
        assert (out / "pattern.svg").read_text().lstrip().startswith("<?xml")

    def test_csv_round_trips_exactly(self, tmp_path):
        from wavetrace.config import RunConfig
        from wavetrace.cli import simulate

        cfg = write_config(tmp_path, SHORT)
        main(["run", cfg])
        bundle, _ = simulate(RunConfig.from_file(cfg))
        data = read_trajectories(tmp_path / "out" / "trajectories.csv")
        xi = data["xi"].reshape(bundle.n_rays, -1).T
        assert xi.tobytes() == bundle.xi.tobytes()

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, SHORT)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", cfg, "--out", str(a)]) == EXIT_OK
        assert main(["run", cfg, "--out", str(b)]) == EXIT_OK
        for name in ("trajectories.csv", "pattern.svg"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_set_override(self, tmp_path):
        cfg = write_config(tmp_path, SHORT)
        assert main(["run", cfg, "--set", "profile.kind=algebraic", "--set", "profile.N=1"]) == EXIT_OK
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["config"]["profile.kind"] == "algebraic"
        assert summary["config"]["fan.xi_max"] == 24.0

    @pytest.mark.parametrize("extra,key", [
        ("profile.epsilon = 1.5\n", "profile.epsilon"),
        ("nonsense.key = 1\n", "nonsense.key"),
        ('medium.kind = "potential"\n', "medium.kind"),
    ])
    def test_config_errors_exit_2(self, tmp_path, capsys, extra, key):
        cfg = write_config(tmp_path, extra)
        assert main(["run", cfg]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert key in err
        assert not (tmp_path / "out").exists()

    def test_bad_set_syntax(self, tmp_path):
        assert main(["run", write_config(tmp_path), "--set", "novalue"]) == EXIT_CONFIG

    def test_halt_exits_3_with_partial_artifacts(self, tmp_path, capsys):
        cfg = write_config(tmp_path, 'profile.kind = "algebraic"\nprofile.N = 2\n')
        assert main(["run", cfg]) == EXIT_HALT
        assert "halted" in capsys.readouterr().err
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        validate_summary(summary)
        assert summary["status"] == "caustic"
        assert summary["error"]["type"] == "CausticError"
        assert summary["error"]["step_index"] == summary["runtime"]["steps_completed"]
        assert summary["error"]["ray_indices"]
        assert summary["first_gathering_zeta"] is not None
        assert (tmp_path / "out" / "trajectories.csv").exists()


class TestOracleCompare:
    def test_gaussian_passes(self, tmp_path, capsys):
        assert main(["oracle-compare", write_config(tmp_path)]) == EXIT_OK
        rep = json.loads((tmp_path / "out" / "comparison.json").read_text())
        assert rep["passed"] and rep["failed"] == []
        assert rep["checks"]["envelope_error"]["value"] < 0.02
        assert not rep["simulated_fringes"]["is_fringed"]
        head = (tmp_path / "out" / "oracle_intensity.csv").read_text().splitlines()[0]
        assert head == "zeta,xi,intensity"
        assert "PASS envelope_error" in capsys.readouterr().out

    def test_n1_passes(self, tmp_path):
        cfg = write_config(tmp_path, 'profile.kind = "algebraic"\nprofile.N = 1\n')
        assert main(["oracle-compare", cfg]) == EXIT_OK
        rep = json.loads((tmp_path / "out" / "comparison.json").read_text())
        assert rep["simulated_fringes"]["is_fringed"] and rep["oracle_fringes"]["is_fringed"]

    def test_coarse_fan_fails_threshold(self, tmp_path):
        assert main(["oracle-compare", write_config(tmp_path, "fan.n_rays = 9\n")]) == EXIT_THRESHOLD
        rep = json.loads((tmp_path / "out" / "comparison.json").read_text())
        assert "flux_correspondence" in rep["failed"]

    def test_unresolvable_grid_exits_4(self, tmp_path, capsys):
        assert main(["oracle-compare", write_config(tmp_path, "oracle.n_points = 4\n")]) == EXIT_ORACLE
        assert "oracle" in capsys.readouterr().err


class TestReproduce:
    def test_profiles_figure(self, tmp_path):
        assert main(["reproduce", "1", "--out", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "profiles.csv").read_text().splitlines()
        assert lines[0] == "xi,R0 (gaussian),R1 (N=1),R2 (N=2)"
        assert (tmp_path / "profiles.svg").exists()

    @pytest.mark.parametrize("fig,col", [(2, "G1 (N=1)"), (3, "G2 (N=2)")])
    def test_launch_G_figures(self, tmp_path, fig, col):
        assert main(["reproduce", str(fig), "--out", str(tmp_path)]) == EXIT_OK
        head = (tmp_path / "launch_G.csv").read_text().splitlines()[0].split(",")
        assert head == ["xi", "G0 (gaussian)", col]

    def test_gaussian_pattern(self, tmp_path):
        assert main(["reproduce", "4", "--out", str(tmp_path)]) == EXIT_OK
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["command"] == "reproduce"
        assert summary["fringe_report"]["is_fringed"] is False

    def test_base_config(self, tmp_path):
        cfg = write_config(tmp_path, "profile.epsilon = 0.5\n")
        assert main(["reproduce", "5", "--config", cfg, "--out", str(tmp_path / "f5")]) in (EXIT_OK, EXIT_HALT)
        summary = json.loads((tmp_path / "f5" / "summary.json").read_text())
        assert summary["config"]["profile.epsilon"] == 0.5
        assert summary["config"]["integrator.zeta_max"] == pytest.approx(2 * np.pi / 0.25)


class TestSweep:
    def test_n_rays_sweep(self, tmp_path):
        cfg = write_config(tmp_path, "integrator.zeta_max = 30.0\noutput.detector_zeta = 25.0\n")
        assert main(["sweep", cfg, "n_rays", "51", "101", "201"]) == EXIT_OK
        doc = json.loads((tmp_path / "out" / "sweep.json").read_text())
        assert doc["values"] == [51, 101, 201]
        assert len(doc["cauchy_differences"]) == 2 and len(doc["cauchy_ratios"]) == 1
        assert doc["cauchy_differences"][0] > doc["cauchy_differences"][1]
        assert (tmp_path / "out" / "sweep.svg").exists()

    def test_N_sweep_has_gaussian_control(self, tmp_path):
        cfg = write_config(tmp_path, SHORT + 'profile.kind = "algebraic"\n')
        assert main(["sweep", cfg, "N", "1", "2", "--jobs", "2"]) == EXIT_OK
        doc = json.loads((tmp_path / "out" / "sweep.json").read_text())
        assert [r["value"] for r in doc["runs"]] == [1, 2]
        assert doc["gaussian_control"]["status"] == "complete"
        assert "cauchy_differences" not in doc

    def test_bad_value(self, tmp_path):
        assert main(["sweep", write_config(tmp_path), "epsilon", "0.5", "2.0"]) == EXIT_CONFIG

    def test_cauchy_differences_shared_labels(self):
        a = {"launch_label": [-1.0, 0.0, 1.0], "detector_xi": [-2.0, 0.0, 2.0]}
        b = {"launch_label": [-1.0, -0.5, 0.0, 0.5, 1.0], "detector_xi": [-2.5, 0, 0.0, 0, 2.5]}
        assert cauchy_differences([a, b]) == [0.5]
        assert cauchy_differences([a, {"launch_label": [], "detector_xi": None}]) == [None]
