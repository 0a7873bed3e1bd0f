"""Shared test configuration: acceptance-criterion reporting.

Acceptance tests record one verdict per criterion through the ``acceptance``
fixture; the verdicts are printed in a summary block at the end of the run so
the pass/fail status of every criterion is visible regardless of capture
settings.
"""

_VERDICTS = []


def record_verdict(number: int, title: str, passed: bool, detail: str) -> None:
    _VERDICTS.append((number, title, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title, passed, detail in sorted(_VERDICTS):
        status = "PASS" if passed else "FAIL"
        tr.write_line(f"[{status}] criterion {number:2d} - {title}: {detail}")
