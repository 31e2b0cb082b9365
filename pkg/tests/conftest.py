import pytest


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; printed again in the terminal summary."""
    def record(number: int, passed: bool, detail: str):
        line = "criterion %2d: %s  %s" % (number, "PASS" if passed else "FAIL", detail)
        print(line)
        request.config._acceptance_lines[number] = line
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
