import pytest

ACCEPTANCE_LOG = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LOG


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
