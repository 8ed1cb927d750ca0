import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion_line(request):
    """Record one PASS/FAIL line; they are echoed again in the terminal summary."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {name}: {detail}"
        print(line)
        lines.append((number, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
