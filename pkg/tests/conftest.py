import re

import pytest

_LINES: list[tuple[int, str]] = []


@pytest.fixture
def acceptance():
    """Record a criterion verdict; the lines are repeated in the terminal summary."""

    def report(criterion: int, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        print(line)
        _LINES.append((criterion, line))
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_LINES, key=lambda item: item[0]):
        terminalreporter.write_line(line)
    passed = sum(1 for _, line in _LINES if re.match(r"\[PASS\]", line))
    terminalreporter.write_line(f"{passed}/{len(_LINES)} criterion checks passed")
