import pytest

from hvacdro.formulations import MethodConfig, run_method
from hvacdro.instances import practical_instance


@pytest.fixture(scope="session")
def practical():
    return practical_instance()


@pytest.fixture(scope="session")
def practical_results(practical):
    """Schedules reused by several modules; solved once per session."""
    cache = {}

    def get(method, **params):
        key = (method, tuple(sorted(params.items())))
        if key not in cache:
            cache[key] = run_method(practical, MethodConfig(method, **params))
        return cache[key]

    return get


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_a"):
        return
    if report.when == "call" or report.failed or report.skipped:
        _CRITERIA.setdefault(name, "PASS" if report.passed else "FAIL")
        if not report.passed:
            _CRITERIA[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        label, _, rest = name[len("test_"):].partition("_")
        terminalreporter.write_line(f"{label.upper():<4} {_CRITERIA[name]}  {rest.replace('_', ' ')}")
