import pytest

from mppp.density import KdeConfig
from mppp.portrait import compute_mppp_streaming, score_against_oracle
from mppp.presets import preset_system
from mppp.sim import SimGrid

# frozen before any pilot run: seed k of the battery is 20140704 + k
SEEDS = [20140704 + k for k in range(10)]

_acceptance_lines = []


def ou_run(seed, T=1.0, M=2**15):
    grid = SimGrid(T, int(128 * T), M, seed=seed)
    curve = compute_mppp_streaming(preset_system("ou"), grid, KdeConfig())
    return score_against_oracle(curve, "ou")


@pytest.fixture(scope="session")
def ou_battery():
    """Reports for the default OU run over the ten frozen seeds."""
    return [ou_run(s) for s in SEEDS]


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
