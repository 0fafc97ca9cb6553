import numpy as np
import pytest

from acceptance_log import RESULTS


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(line)
