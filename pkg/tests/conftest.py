import math
from pathlib import Path

import pytest

from vsgsim.config import load_scenario
from vsgsim.controllers import STRATEGIES
from vsgsim.simulator import Plant, run

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
CANONICAL = CONFIGS / "canonical.toml"

# nominal hardware parameters
U_G = 70.7107
L_FILTER = 7e-3
L_LINE = 2e-3
R_LINE = 0.6
J0 = 0.0025
D_P0 = 0.3
OMEGA_0 = 100 * math.pi


@pytest.fixture(scope="session")
def canonical():
    return load_scenario(CANONICAL)


@pytest.fixture(scope="session")
def plant(canonical):
    return Plant(canonical.grid)


class _Traces(dict):
    """Lazily simulated canonical traces, one per strategy, shared by the session."""

    def __init__(self, scenario):
        super().__init__()
        self.scenario = scenario

    def __missing__(self, name):
        from dataclasses import replace

        tr = run(replace(self.scenario, strategy=name))
        self[name] = tr
        return tr


@pytest.fixture(scope="session")
def canonical_traces(canonical):
    return _Traces(canonical)


@pytest.fixture(scope="session")
def all_strategies():
    return tuple(STRATEGIES)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
