"""Shared test helpers: a report channel that prints one line per
acceptance criterion in the terminal summary (pytest captures stdout
inside tests, so the lines are collected and emitted at the end)."""

_criterion_lines: list[str] = []


def report_criterion(line: str) -> None:
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)
