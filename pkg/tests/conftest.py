import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_line(request):
    """Record one pass/fail summary line for an acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(line: str):
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
