import re

_ACCEPTANCE = re.compile(r"test_acceptance\.py::.*test_criterion_(\d+)([a-z_]*)")

_results: list[tuple[int, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    match = _ACCEPTANCE.search(report.nodeid)
    if match:
        label = match.group(1).lstrip("0") + match.group(2).replace("_", " ")
        _results.append((int(match.group(1)), label, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for _, label, outcome in sorted(_results):
        word = {"PASSED": "PASS", "FAILED": "FAIL"}.get(outcome, outcome)
        terminalreporter.write_line(f"criterion {label}: {word}")
