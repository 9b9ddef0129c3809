import sys
from pathlib import Path

import numpy as np
import pytest

from detopt.model import build_sequestration

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def k23():
    return build_sequestration(2, 3)


@pytest.fixture
def k23_text():
    return (FIXTURES / "k23.crn").read_text()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        title, passed, detail = results[num]
        line = f"criterion {num:>2} {'PASS' if passed else 'FAIL'}  {title}"
        if detail and not passed:
            line += f"  -- {detail}"
        terminalreporter.write_line(line)
