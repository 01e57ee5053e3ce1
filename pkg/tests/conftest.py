def pytest_configure(config):
    config._acceptance_report = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    report = getattr(config, "_acceptance_report", None)
    if report:
        terminalreporter.section("acceptance criteria")
        for line in sorted(report):
            terminalreporter.write_line(line)
