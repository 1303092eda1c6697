import pytest

from proxemic_rl.env import GridConfig

# acceptance outcomes, filled by test_acceptance.py and echoed after the run
CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def grid():
    return GridConfig()


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(CRITERIA, key=lambda k: int(k.split()[0])):
        ok, detail = CRITERIA[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
