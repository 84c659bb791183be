import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cptgame.equilibrium import GameConfig  # noqa: E402

X0 = np.array([-10.0, -5.0, -5.0])


@pytest.fixture
def rational_cfg():
    I = np.eye(3)
    return GameConfig(I, 0.9 * I, I, 0.9, X0)


@pytest.fixture
def swapped_cfg():
    I = np.eye(3)
    return GameConfig(I, I, 0.9 * I, 0.9, X0)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.summary_lines():
        terminalreporter.write_line(line)
