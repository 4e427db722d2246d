import re

import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """``acceptance(n, passed, detail)`` records and prints the verdict line for criterion n."""

    def report(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _LINES[number] = line
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_LINES):
            terminalreporter.write_line(_LINES[number])
