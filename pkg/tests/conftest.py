import pytest

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """``record(number, name, passed, detail)`` for the acceptance summary."""
    def record(number, name, passed, detail):
        ACCEPTANCE[number] = (name, bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d} {name}: {detail}")
