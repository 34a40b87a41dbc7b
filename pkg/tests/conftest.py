SCOREBOARD = []


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance scoreboard where output capture cannot swallow it."""
    if not SCOREBOARD:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(SCOREBOARD, key=lambda item: item[0]):
        terminalreporter.write_line(line[1])
