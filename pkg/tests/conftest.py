from pathlib import Path

import pytest

from cogroute.config import ExperimentConfig
from cogroute.grid import build_grid

ROOT = Path(__file__).resolve().parents[1]
REFERENCE = ROOT / "configs" / "reference.toml"
TRIVIAL = ROOT / "configs" / "trivial.toml"

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def reference():
    return ExperimentConfig.load(REFERENCE)


@pytest.fixture(scope="session")
def grid2():
    return build_grid(2, 250.0)


@pytest.fixture(scope="session")
def grid4():
    return build_grid(4, 250.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
