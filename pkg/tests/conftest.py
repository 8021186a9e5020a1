"""Shared pytest config: per-criterion summary lines for the acceptance suite."""

_acceptance_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "setup" and report.skipped:
        _acceptance_results[name] = "SKIP"
    elif report.when == "call":
        _acceptance_results[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in _acceptance_results.items():
        terminalreporter.write_line(f"[{status}] {name}")
