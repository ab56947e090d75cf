"""Prints one PASS/FAIL line per acceptance criterion after the run."""

import re

_CRITERIA: dict[str, tuple[str, str]] = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)(\w*)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m or report.when == "teardown" or (report.when == "setup" and report.passed):
        return
    key = f"{int(m.group(1))}{m.group(2).replace('_', ' ').rstrip()}"
    detail = dict(report.user_properties).get("detail", "")
    if report.failed and not detail:
        detail = report.longreprtext.strip().splitlines()[-1][:160] if report.longreprtext else ""
    _CRITERIA[key] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(k.split()[0]), k)):
        status, detail = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}")
