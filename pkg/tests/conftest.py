import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import bkt  # noqa: E402


@pytest.fixture(autouse=True)
def _reset_imt():
    yield
    bkt.disable_imt()


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
