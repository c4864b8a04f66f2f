import pytest

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, label: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_LINES.append(f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {label}"
                            + (f": {detail}" if detail else ""))


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
