"""Shared pytest plumbing for the suite.

Collects one verdict line per acceptance criterion and prints them in a
summary block at the end of the run, so the pass/fail record survives
output capturing.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
