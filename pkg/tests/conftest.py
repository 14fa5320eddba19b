import sys
from pathlib import Path

import pytest

from harvestsim import ModelParams

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def fig1_params():
    return ModelParams(r=0.5, K=1.0, q=0.8, alpha=1.0, beta=1.0)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; the test fails when the criterion does."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        print(line)
        _ACCEPTANCE[number] = line
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
