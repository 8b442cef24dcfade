import numpy as np
import pytest

from nullvol import catalog


@pytest.fixture(scope="session")
def records():
    return {eid: catalog.build(eid) for eid in catalog.CATALOG_IDS}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
