import math

import pytest

from wavetrace.config import DEFAULTS, RunConfig, defaults_text, parse_value
from wavetrace.errors import ConfigError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


def test_defaults_resolve():
    cfg = RunConfig.default()
    assert cfg["profile.epsilon"] == 0.25
    assert cfg["fan.xi_min"] == -12.0 and cfg["fan.xi_max"] == 12.0
    assert cfg["output.detector_zeta"] == pytest.approx(2 * math.pi / 0.25**2)
    assert cfg["integrator.zeta_max"] == pytest.approx(4 * math.pi / 0.25**2)
    assert cfg["integrator.n_steps"] == math.ceil(1.5 * cfg["integrator.zeta_max"] / 0.1)
    assert cfg["output.bin_width"] == pytest.approx(0.4)
    assert cfg["integrator.enforce_constraint"] is True
    assert "auto" not in cfg.effective().values()


def test_defaults_text_round_trips(tmp_path):
    path = tmp_path / "d.toml"
    path.write_text(defaults_text())
    parsed = tomllib.loads(path.read_text())
    assert parsed["profile"]["kind"] == "gaussian"
    cfg = RunConfig.from_file(path)
    assert cfg.effective() == RunConfig.default().effective()
    assert set(k for k in DEFAULTS) <= set(cfg.effective())


def test_auto_reresolved_after_override():
    cfg = RunConfig.default().with_overrides({"profile.epsilon": 0.5})
    assert cfg["fan.xi_max"] == pytest.approx(6.0)
    assert cfg["output.bin_width"] == pytest.approx(0.2)
    cfg = RunConfig.default(profile__kind="algebraic", profile__N=2)
    assert cfg["fan.xi_max"] == pytest.approx(24.0)


def test_one_sided_auto_extent():
    cfg = RunConfig.default(fan__xi_max=10.0)
    assert cfg["fan.xi_min"] == -10.0


def test_nested_tables(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[profile]\nkind = "algebraic"\nN = 1\n[integrator]\nd_tau = 0.05\n')
    cfg = RunConfig.from_file(path, {"fan.n_rays": 101})
    assert cfg["profile.kind"] == "algebraic" and cfg["integrator.d_tau"] == 0.05 and cfg["fan.n_rays"] == 101


@pytest.mark.parametrize("raw,key", [
    ({"profile.epsilon": 1.5}, "profile.epsilon"),
    ({"profile.epsilon": 0.0}, "profile.epsilon"),
    ({"profile.kind": "square"}, "profile.kind"),
    ({"profile.N": 0}, "profile.N"),
    ({"fan.n_rays": 3}, "fan.n_rays"),
    ({"fan.xi_min": 5.0, "fan.xi_max": -5.0}, "fan.xi_min"),
    ({"integrator.d_tau": -0.1}, "integrator.d_tau"),
    ({"integrator.scheme": "euler"}, "integrator.scheme"),
    ({"medium.kind": "refractive", "front_end": "quantum"}, "medium.kind"),
    ({"medium.kind": "potential"}, "medium.kind"),
    ({"medium.kind": "refractive", "medium.value": 0.0}, "medium.value"),
    ({"front_end": "quantum", "medium.kind": "potential", "medium.value": 1.0}, "medium.value"),
    ({"front_end": "quantum", "medium.kind": "potential", "integrator.enforce_constraint": True},
     "integrator.enforce_constraint"),
    ({"output.prominence": 1.5}, "output.prominence"),
    ({"bogus.key": 1}, "bogus.key"),
    ({"profile.kind": "custom_samples"}, "fan.xi_min"),
])
def test_errors_name_the_key(raw, key):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_mapping(raw)
    assert info.value.key == key


def test_bad_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("profile.kind = \n")
    with pytest.raises(ConfigError, match="config"):
        RunConfig.from_file(path)
    with pytest.raises(ConfigError):
        RunConfig.from_file(tmp_path / "missing.toml")


def test_parse_value():
    assert parse_value("profile.epsilon", "0.5") == 0.5
    assert parse_value("profile.kind", "algebraic") == "algebraic"
    assert parse_value("integrator.go_limit_mode", "true") is True
    assert parse_value("fan.n_rays", "101") == 101


def test_custom_samples(tmp_path):
    import numpy as np

    x = np.linspace(-16, 16, 161)
    np.savetxt(tmp_path / "s.csv", np.column_stack([x, np.exp(-(0.25 * x) ** 2)]), delimiter=",",
               header="xi,R", comments="")
    (tmp_path / "c.toml").write_text('profile.kind = "custom_samples"\nprofile.samples = "s.csv"\n'
                                     'fan.xi_min = -12.0\nfan.xi_max = 12.0\n')
    cfg = RunConfig.from_file(tmp_path / "c.toml")
    p = cfg.profile()
    assert p.kind == "custom_samples"
    assert cfg.fan(p).n_rays == 201


def test_objects():
    cfg = RunConfig.default(front_end="quantum", medium__kind="potential", medium__value=0.1,
                            integrator__coupling_scale=0.5, profile__scale=7.3)
    assert cfg.medium().kind == "potential"
    assert cfg.integrator().coupling_scale == 0.5
    assert cfg.integrator().enforce_constraint is False
    assert cfg.profile().scale == 7.3
    assert cfg.grid().n_points >= 1024
