from pathlib import Path

import pytest

from cdem import _backend, read_table

DATA = Path(__file__).parent / "data"

BACKENDS = ["python"] + (["compiled"] if _backend.has_compiled() else [])


@pytest.fixture(scope="session")
def table1():
    return read_table(DATA / "table1.csv")


@pytest.fixture(scope="session")
def table2():
    return read_table(DATA / "table2.csv")


@pytest.fixture(scope="session")
def table3():
    return read_table(DATA / "table3.csv")


@pytest.fixture(params=BACKENDS)
def backend(request):
    previous = _backend.use(request.param)
    yield request.param
    _backend.use(previous)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
