import pytest

_criteria: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record a numbered pass/fail line, then assert on it."""

    def record(number: int, ok: bool, detail: str):
        _criteria[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        assert ok, _criteria[number]

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        terminalreporter.write_line(_criteria[number])
