import pytest

CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion.

    Call the returned function with ``(ok, detail)``; it asserts ``ok``.
    """
    name = request.node.name

    def record(ok, detail=""):
        CRITERIA[name] = (bool(ok), detail)
        assert ok, detail

    return record


def pytest_runtest_logreport(report):
    # a test that errors before calling record() still gets a FAIL line
    if report.when == "call" and report.failed and "test_acceptance" in report.nodeid:
        name = report.nodeid.rsplit("::", 1)[-1]
        CRITERIA.setdefault(name, (False, "raised before completing"))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in CRITERIA.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
