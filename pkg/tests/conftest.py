import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report(capsys):
    """Print and record one PASS/FAIL line, then assert the verdict."""
    def _report(number: int, title: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:2d}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert passed, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
