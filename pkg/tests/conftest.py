import numpy as np
import pytest

from bohmlab.grid import UnitSystem
from bohmlab.scenarios import ScenarioConfig, run_scenario

# lines printed by the acceptance module, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []

# positions for the sin^2 kick scaling; 0.5 reuses the full protective run
KICK_POSITIONS = (0.2, 0.25, 0.35, 0.5, 0.75)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def units():
    return UnitSystem(hbar=1.0, mass_m=1.0, mass_M=100.0, box_length_L=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def protective_report():
    """The canonical protective run: eps=0.1, x0=0.5, T=50, 256x256, 10^3 paths."""
    return run_scenario(ScenarioConfig("protective"))


@pytest.fixture(scope="session")
def kick_scan(protective_report):
    out = {0.5: protective_report}
    for x0 in KICK_POSITIONS:
        if x0 not in out:
            out[x0] = run_scenario(ScenarioConfig("protective", x0=x0, n_traj=0))
    return out


@pytest.fixture(scope="session")
def release_report():
    return run_scenario(ScenarioConfig("wall_release"))


@pytest.fixture(scope="session")
def sweep_report():
    return run_scenario(ScenarioConfig("adiabatic_sweep"))
