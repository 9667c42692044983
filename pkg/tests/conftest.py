import pytest

VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line, shown in the terminal summary."""
    def record(label: str, ok: bool, note: str = "") -> bool:
        VERDICTS.append(f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({note})" if note else ""))
        print(VERDICTS[-1])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
