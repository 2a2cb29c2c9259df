import pytest

CRITERIA: dict[str, str] = {}


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion; reported at session end."""

    def record(key, ok, detail):
        CRITERIA[key] = f"{key}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for key in sorted(CRITERIA, key=lambda k: int(k.split()[1])):
            terminalreporter.write_line(CRITERIA[key])
