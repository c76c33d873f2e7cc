import pytest

# (criterion number, passed, detail), filled by test_acceptance.report
CRITERIA_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(CRITERIA_LINES):
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def report():
    def _report(num, ok, detail):
        CRITERIA_LINES.append((num, bool(ok), detail))
        print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {num}: {detail}"
    return _report
