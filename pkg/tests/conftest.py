import pytest

_DETAILS = pytest.StashKey[dict]()
_OUTCOMES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_DETAILS] = {}
    config.stash[_OUTCOMES] = {}


@pytest.fixture
def acceptance(request):
    """Record a one-line measurement summary for an acceptance criterion."""
    details = request.config.stash[_DETAILS]

    def record(text):
        details[request.node.nodeid] = text

    return record


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        outcomes = report.config.stash[_OUTCOMES] if hasattr(report, "config") else None
        if outcomes is not None:
            outcomes[report.nodeid] = report.outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.config = item.config


def pytest_terminal_summary(terminalreporter, config):
    outcomes = config.stash[_OUTCOMES]
    if not outcomes:
        return
    details = config.stash[_DETAILS]
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in outcomes.items():
        name = nodeid.split("::")[-1]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {details.get(nodeid, '')}")
