"""Shared pytest wiring.

Verdict lines recorded by the acceptance suite are replayed after the run,
outside output capture, so they show up even without ``-s``.
"""

verdict_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not verdict_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in verdict_lines:
        terminalreporter.write_line(line)
