import pytest

_results = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if "acceptance" in report.keywords:
            name = report.nodeid.split("::", 1)[-1]
            prev = _results.get(name)
            if prev is None or report.outcome != "passed":
                _results[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _results.items():
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")


@pytest.fixture(scope="session")
def rng():
    import numpy as np

    return np.random.default_rng(20240601)
