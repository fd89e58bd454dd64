import pytest

from kdvcrit import solve_branch

ACCEPTANCE_MODULE = "test_acceptance.py"
_acceptance = {}


@pytest.fixture(scope="session")
def branches():
    return {n: solve_branch(n) for n in range(4)}


@pytest.fixture(scope="session")
def p0(branches):
    return branches[0]


def pytest_runtest_logreport(report):
    if ACCEPTANCE_MODULE not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        name = report.nodeid.split("::")[-1]
        prev = _acceptance.get(name, "PASS")
        _acceptance[name] = "PASS" if report.passed and prev == "PASS" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        terminalreporter.write_line(f"{_acceptance[name]}  {name}")
