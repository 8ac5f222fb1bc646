import math

import numpy as np
import pytest

from wavetrace.config import RunConfig
from wavetrace.errors import SimulationHalted
from wavetrace.integrator import run

EPS = 0.25
DETECTOR = 2 * math.pi / EPS**2

_ACCEPTANCE_LINES = []


def simulate(**overrides):
    """Run a configuration built from flat dotted keys; returns ``(bundle, error)``."""
    cfg = RunConfig.from_mapping(overrides)
    profile = cfg.profile()
    try:
        return run(profile, cfg.medium(), cfg.integrator(), fan=cfg.fan(profile)), None
    except SimulationHalted as exc:
        return exc.partial, exc


def to_detector(**overrides):
    """Defaults, stopped just past the detector plane at ``2 pi / eps^2``."""
    eps = overrides.get("profile.epsilon", EPS)
    overrides.setdefault("integrator.zeta_max", 2 * math.pi / eps**2 + 0.1)
    return simulate(**overrides)


@pytest.fixture(scope="session")
def gaussian_run():
    bundle, err = to_detector()
    assert err is None
    return bundle


@pytest.fixture(scope="session")
def n1_run():
    bundle, err = to_detector(**{"profile.kind": "algebraic", "profile.N": 1})
    assert err is None
    return bundle


@pytest.fixture(scope="session")
def n2_run():
    """Algebraic N=2 run; may halt, in which case the partial bundle is returned."""
    return to_detector(**{"profile.kind": "algebraic", "profile.N": 2})


@pytest.fixture
def report_criterion():
    """Record a one-line acceptance verdict printed in the terminal summary."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(line)


def mirror_error(bundle):
    """Largest violation of xi -> -xi symmetry over the whole bundle."""
    return float(max(np.max(np.abs(bundle.xi + bundle.xi[:, ::-1])),
                     np.max(np.abs(bundle.zeta - bundle.zeta[:, ::-1])),
                     np.max(np.abs(bundle.rho_x + bundle.rho_x[:, ::-1])),
                     np.max(np.abs(bundle.rho_z - bundle.rho_z[:, ::-1]))))
