import pytest

from gshe import homoclinic


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    mp.setenv("GSHE_CACHE_DIR", str(tmp_path_factory.mktemp("gshe_cache")))
    yield
    mp.undo()


@pytest.fixture(scope="session")
def orbit_005():
    """Branch-0 symmetric orbit at eps = -0.05, 30 digits."""
    return homoclinic.homoclinic_invariant("-0.05", 2, 0, 30)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; it is echoed now and again in the terminal summary."""
    def _record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
