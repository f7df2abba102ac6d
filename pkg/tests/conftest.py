"""Collects one verdict per acceptance criterion and prints them after the run."""
import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """``criterion(number, title, passed, detail)`` records a verdict."""
    store = request.config.stash[_RESULTS]

    def record(number, title, passed, detail=""):
        store[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, detail = results[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] C{number:<2} {title}: {detail}")
    n_pass = sum(r[1] for r in results.values())
    terminalreporter.write_line(f"{n_pass}/{len(results)} acceptance criteria passed")
