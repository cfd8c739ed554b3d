"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""
import pytest

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    verdict = "PASS" if report.passed else "FAIL"
    _CRITERIA[number] = (verdict, title, getattr(item, "detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        verdict, title, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}  {detail}".rstrip())
