import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; call before asserting so failures are listed too."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number, title, passed, observed, tolerance):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} | observed: {observed} | tolerance: {tolerance}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
