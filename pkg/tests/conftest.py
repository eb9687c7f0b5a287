import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from wfqubo.io import canonical_instance  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def canonical():
    return canonical_instance()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
