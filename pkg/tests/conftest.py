import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``criterion(label, ok, detail)`` records one acceptance line."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(label, ok, detail=""):
        lines.append(f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
