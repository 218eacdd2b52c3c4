"""Shared pytest hooks: collect acceptance-criterion outcomes and print them
as a summary block at the end of the run."""

criterion_lines: list[str] = []


def record_criterion(line: str) -> None:
    criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(criterion_lines)):
            terminalreporter.write_line(line)
